"""Student registry: domain types, CSV load/store, and cohort selection.

The registry is a snapshot of three relations (students, study rights,
credit events) exported from a student information system.  It is
immutable after loading; every operation here is a pure function over it.

CSV formats (UTF-8, comma separated, ``\\n`` line endings):

* ``students.csv`` -- ``student_id,gender`` with gender one of F/M/U.
* ``study_rights.csv`` -- ``study_right_id,student_id,start_date,
  right_type,field,graduation_date``; dates are ISO-8601, an empty
  graduation_date means "has not graduated", right_type is ``combined``
  (combined Bachelor's + Master's right) or ``other``, field is one of
  ``engineering``, ``arts_and_design``, ``business``.
* ``credits.csv`` -- ``study_right_id,registration_date,credits`` with
  credits a positive decimal (ECTS).
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from .dates import validity_end
from .errors import DataValidationError

#: Study rights starting on or before this date belong to the pre-Bologna
#: degree regime and are excluded from every cohort.
BOLOGNA_CUTOFF = dt.date(2005, 8, 1)


class Gender(enum.Enum):
    FEMALE = "female"
    MALE = "male"
    UNSPECIFIED = "unspecified"


class RightType(enum.Enum):
    COMBINED_BSC_MSC = "combined"
    OTHER = "other"


class StudyField(enum.Enum):
    ENGINEERING = "engineering"
    ARTS_AND_DESIGN = "arts_and_design"
    BUSINESS = "business"


_GENDER_CODES = {"F": Gender.FEMALE, "M": Gender.MALE, "U": Gender.UNSPECIFIED}
_GENDER_TO_CODE = {v: k for k, v in _GENDER_CODES.items()}

STUDENTS_HEADER = ["student_id", "gender"]
STUDY_RIGHTS_HEADER = [
    "study_right_id",
    "student_id",
    "start_date",
    "right_type",
    "field",
    "graduation_date",
]
CREDITS_HEADER = ["study_right_id", "registration_date", "credits"]


@dataclass(frozen=True)
class Student:
    student_id: str
    gender: Gender


@dataclass(frozen=True)
class StudyRight:
    study_right_id: str
    student_id: str
    start_date: dt.date
    right_type: RightType
    field: StudyField
    graduation_date: dt.date | None = None

    @property
    def validity_end(self) -> dt.date:
        return validity_end(self.start_date)

    def is_active(self, on: dt.date) -> bool:
        """Active means started, not graduated, and not past validity."""
        if on < self.start_date:
            return False
        end = self.validity_end
        if self.graduation_date is not None and self.graduation_date < end:
            end = self.graduation_date
        return on < end


@dataclass(frozen=True)
class CreditEvent:
    study_right_id: str
    registration_date: dt.date
    credits: float


@dataclass(frozen=True)
class Registry:
    students: tuple[Student, ...]
    study_rights: tuple[StudyRight, ...]
    credit_events: tuple[CreditEvent, ...]

    @cached_property
    def students_by_id(self) -> dict[str, Student]:
        return {s.student_id: s for s in self.students}

    @cached_property
    def rights_by_id(self) -> dict[str, StudyRight]:
        return {r.study_right_id: r for r in self.study_rights}

    @cached_property
    def credits_by_right(self) -> dict[str, tuple[CreditEvent, ...]]:
        grouped: dict[str, list[CreditEvent]] = {}
        for event in self.credit_events:
            grouped.setdefault(event.study_right_id, []).append(event)
        return {key: tuple(events) for key, events in grouped.items()}

    def validate(self) -> None:
        """Check key uniqueness, referential integrity, and row invariants."""
        seen_students: set[str] = set()
        for student in self.students:
            if not student.student_id:
                raise DataValidationError("empty student_id")
            if student.student_id in seen_students:
                raise DataValidationError(f"duplicate student_id {student.student_id!r}")
            seen_students.add(student.student_id)

        seen_rights: set[str] = set()
        for right in self.study_rights:
            if not right.study_right_id:
                raise DataValidationError("empty study_right_id")
            if right.study_right_id in seen_rights:
                raise DataValidationError(f"duplicate study_right_id {right.study_right_id!r}")
            seen_rights.add(right.study_right_id)
            if right.student_id not in seen_students:
                raise DataValidationError(
                    f"study right {right.study_right_id!r} references unknown "
                    f"student_id {right.student_id!r}"
                )
            if right.graduation_date is not None and right.graduation_date < right.start_date:
                raise DataValidationError(
                    f"study right {right.study_right_id!r} graduated "
                    f"{right.graduation_date} before start {right.start_date}"
                )

        for event in self.credit_events:
            right = self.rights_by_id.get(event.study_right_id)
            if right is None:
                raise DataValidationError(
                    f"credit event references unknown study_right_id {event.study_right_id!r}"
                )
            if not event.credits > 0:
                raise DataValidationError(
                    f"credit event for {event.study_right_id!r} on "
                    f"{event.registration_date} has non-positive credits {event.credits}"
                )
            if event.registration_date < right.start_date:
                raise DataValidationError(
                    f"credit event for {event.study_right_id!r} registered "
                    f"{event.registration_date} before the right started {right.start_date}"
                )


def format_decimal(value: float) -> str:
    """Canonical decimal text: integral values bare, others shortest repr."""
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _parse_date(text: str, *, where: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError as exc:
        raise DataValidationError(f"{where}: bad date {text!r} (expected YYYY-MM-DD)") from exc


def _read_rows(path: Path, header: list[str]) -> list[tuple[int, list[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            rows = list(reader)
    except OSError as exc:
        raise DataValidationError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataValidationError(f"{path}: empty file, expected header {','.join(header)}")
    if rows[0] != header:
        raise DataValidationError(
            f"{path}:1: bad header {','.join(rows[0])!r}, expected {','.join(header)!r}"
        )
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataValidationError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
            )
        out.append((lineno, row))
    return out


def load_registry(students_path: str | Path, study_rights_path: str | Path,
                  credits_path: str | Path) -> Registry:
    """Load and cross-validate the three registry CSV files.

    Raises DataValidationError naming the file and line for malformed
    rows, and naming the offending key for referential failures.
    """
    students_path = Path(students_path)
    study_rights_path = Path(study_rights_path)
    credits_path = Path(credits_path)

    students = []
    for lineno, row in _read_rows(students_path, STUDENTS_HEADER):
        student_id, gender_code = row
        where = f"{students_path}:{lineno}"
        if gender_code not in _GENDER_CODES:
            raise DataValidationError(f"{where}: bad gender {gender_code!r} (expected F, M, or U)")
        students.append(Student(student_id=student_id, gender=_GENDER_CODES[gender_code]))

    rights = []
    for lineno, row in _read_rows(study_rights_path, STUDY_RIGHTS_HEADER):
        right_id, student_id, start, right_type, field, graduation = row
        where = f"{study_rights_path}:{lineno}"
        try:
            rtype = RightType(right_type)
        except ValueError:
            raise DataValidationError(f"{where}: bad right_type {right_type!r}") from None
        try:
            sfield = StudyField(field)
        except ValueError:
            raise DataValidationError(f"{where}: bad field {field!r}") from None
        rights.append(StudyRight(
            study_right_id=right_id,
            student_id=student_id,
            start_date=_parse_date(start, where=where),
            right_type=rtype,
            field=sfield,
            graduation_date=_parse_date(graduation, where=where) if graduation else None,
        ))

    events = []
    for lineno, row in _read_rows(credits_path, CREDITS_HEADER):
        right_id, registration, credits_text = row
        where = f"{credits_path}:{lineno}"
        try:
            credits_value = float(credits_text)
        except ValueError:
            raise DataValidationError(f"{where}: bad credits {credits_text!r}") from None
        events.append(CreditEvent(
            study_right_id=right_id,
            registration_date=_parse_date(registration, where=where),
            credits=credits_value,
        ))

    registry = Registry(
        students=tuple(students),
        study_rights=tuple(rights),
        credit_events=tuple(events),
    )
    registry.validate()
    return registry


def write_registry(registry: Registry, directory: str | Path) -> dict[str, Path]:
    """Write the canonical CSV files; loading them back round-trips exactly."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "students": directory / "students.csv",
        "study_rights": directory / "study_rights.csv",
        "credits": directory / "credits.csv",
    }

    with open(paths["students"], "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(STUDENTS_HEADER)
        for student in registry.students:
            writer.writerow([student.student_id, _GENDER_TO_CODE[student.gender]])

    with open(paths["study_rights"], "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(STUDY_RIGHTS_HEADER)
        for right in registry.study_rights:
            writer.writerow([
                right.study_right_id,
                right.student_id,
                right.start_date.isoformat(),
                right.right_type.value,
                right.field.value,
                right.graduation_date.isoformat() if right.graduation_date else "",
            ])

    with open(paths["credits"], "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CREDITS_HEADER)
        for event in registry.credit_events:
            writer.writerow([
                event.study_right_id,
                event.registration_date.isoformat(),
                format_decimal(event.credits),
            ])

    return paths


def load_registry_dir(directory: str | Path) -> Registry:
    """Load a registry from a directory holding the three canonical files."""
    directory = Path(directory)
    return load_registry(
        directory / "students.csv",
        directory / "study_rights.csv",
        directory / "credits.csv",
    )


def filter_cohort(registry: Registry, observation_date: dt.date,
                  *, include_boundary_start: bool = False) -> list[StudyRight]:
    """Select the study rights observable at ``observation_date``.

    A right qualifies when it started after the Bologna cutoff, is a
    combined Bachelor's + Master's right, and is active on the
    observation date (started, not yet graduated, validity not expired).
    ``include_boundary_start`` admits rights starting exactly on the
    cutoff date, for sensitivity analysis.
    """
    cohort = []
    for right in registry.study_rights:
        if include_boundary_start:
            if right.start_date < BOLOGNA_CUTOFF:
                continue
        elif right.start_date <= BOLOGNA_CUTOFF:
            continue
        if right.right_type is not RightType.COMBINED_BSC_MSC:
            continue
        if not right.is_active(observation_date):
            continue
        cohort.append(right)
    return cohort
