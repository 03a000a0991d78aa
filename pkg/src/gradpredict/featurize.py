"""Covariate and label extraction for cohort study rights.

Each cohort member becomes one row of covariates computed as of the
observation date, plus outcome labels computed from later registry
state (graduation dates).  All date windows are pinned here:

* sum_of_cr counts credit events registered on or before the
  observation date (inclusive).
* no_credits_in_18m is 1 when no event falls in the half-open window
  (observation_date - 18 months, observation_date]: open on the left,
  inclusive on the right, matching the inclusive sum rule.
* distance_to_validity_end is the day count to start + 7 years divided
  by 365.25.
* semesters are counted as semester-boundary crossings (Aug 1 / Jan 1);
  graduating within the observation semester counts as 0.
* graduates_in_4y is date-inclusive: graduation on exactly
  observation_date + 4 calendar years still counts.

Reference categories carry no dummy of their own: a female student and
a business-school right have all gender/field model terms at zero.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .dates import add_months, add_years, semester_ordinal, validity_end
from .errors import DataValidationError
from .privacy import AuditLog, ColumnManifest, PrivacyPolicy, check_columns, default_policy
from .registry import (
    CreditEvent,
    Gender,
    Registry,
    StudyField,
    StudyRight,
    filter_cohort,
    format_decimal,
)

#: Canonical CSV column order for a feature table.
FEATURE_COLUMNS = (
    "study_right_id",
    "gender_female",
    "gender_male",
    "field_engineering",
    "field_arts_and_design",
    "field_business",
    "sum_of_cr",
    "no_credits_in_18m",
    "distance_to_validity_end",
    "graduated",
    "graduates_in_4y",
    "semesters_to_degree",
)

#: Covariate columns (everything except the key and the labels).
COVARIATE_COLUMNS = (
    "gender_female",
    "gender_male",
    "field_engineering",
    "field_arts_and_design",
    "field_business",
    "sum_of_cr",
    "no_credits_in_18m",
    "distance_to_validity_end",
)

LABEL_COLUMNS = ("graduated", "graduates_in_4y", "semesters_to_degree")

#: Model terms in the order the predictive models use them.
MODEL_TERMS = (
    "gender_male",
    "field_arts_and_design",
    "field_engineering",
    "no_credits_in_18m",
    "sum_of_cr",
    "distance_to_validity_end",
)

CREDIT_WINDOW_MONTHS = 18
GRADUATION_WINDOW_YEARS = 4


def sum_credits(events: Iterable[CreditEvent], observation_date: dt.date) -> float:
    """Total ECTS registered on or before the observation date."""
    return float(sum(e.credits for e in events if e.registration_date <= observation_date))


def no_credits_window(events: Iterable[CreditEvent], observation_date: dt.date) -> int:
    """1 when no credit event falls within the trailing 18-month window."""
    cutoff = add_months(observation_date, -CREDIT_WINDOW_MONTHS)
    for event in events:
        if cutoff < event.registration_date <= observation_date:
            return 0
    return 1


def distance_to_validity_end(start_date: dt.date, observation_date: dt.date) -> float:
    """Years (day count / 365.25) from the observation date to validity end."""
    if observation_date < start_date:
        raise DataValidationError(
            f"observation date {observation_date} before study right start {start_date}"
        )
    end = validity_end(start_date)
    days = (end - observation_date).days
    if days < 0:
        raise DataValidationError(
            f"study right starting {start_date} expired {end}, "
            f"before observation date {observation_date}"
        )
    return days / 365.25


def semesters_between(observation_date: dt.date, graduation_date: dt.date) -> int:
    """Semester-boundary crossings from the observation to graduation."""
    if graduation_date < observation_date:
        raise DataValidationError(
            f"graduation {graduation_date} before observation date {observation_date}"
        )
    return semester_ordinal(graduation_date) - semester_ordinal(observation_date)


@dataclass(frozen=True)
class FeatureRow:
    study_right_id: str
    gender_female: int
    gender_male: int
    field_engineering: int
    field_arts_and_design: int
    field_business: int
    sum_of_cr: float
    no_credits_in_18m: int
    distance_to_validity_end: float
    graduated: int | None = None
    graduates_in_4y: int | None = None
    semesters_to_degree: int | None = None

    def __post_init__(self):
        if self.gender_female + self.gender_male > 1:
            raise DataValidationError(
                f"row {self.study_right_id!r}: both gender dummies set"
            )
        field_sum = self.field_engineering + self.field_arts_and_design + self.field_business
        if field_sum != 1:
            raise DataValidationError(
                f"row {self.study_right_id!r}: expected exactly one field dummy, got {field_sum}"
            )
        if self.sum_of_cr < 0:
            raise DataValidationError(f"row {self.study_right_id!r}: negative sum_of_cr")

    def covariates(self) -> dict[str, float]:
        """Covariate name -> value map, as consumed by model scoring."""
        return {name: float(getattr(self, name)) for name in COVARIATE_COLUMNS}

    def value(self, column: str):
        if column not in FEATURE_COLUMNS:
            raise DataValidationError(f"unknown feature column {column!r}")
        return getattr(self, column)


@dataclass(frozen=True)
class FeatureTable:
    #: None only for tables loaded from CSV without a declared date.
    observation_date: dt.date | None
    rows: tuple[FeatureRow, ...]
    manifest: ColumnManifest
    label_horizon: dt.date | None = None

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def columns(self) -> tuple[str, ...]:
        return self.manifest.columns

    def column(self, name: str) -> list:
        if name not in self.manifest.columns:
            raise DataValidationError(f"column {name!r} not in table manifest")
        return [row.value(name) for row in self.rows]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(self.manifest.columns)
            for row in self.rows:
                writer.writerow([_format_cell(name, row.value(name))
                                 for name in self.manifest.columns])


def _format_cell(name: str, value) -> str:
    if value is None:
        return ""
    if name == "study_right_id":
        return str(value)
    if name in ("sum_of_cr", "distance_to_validity_end"):
        return format_decimal(float(value))
    return str(int(value))


def _parse_cell(name: str, text: str):
    if name == "study_right_id":
        return text
    if text == "":
        if name in LABEL_COLUMNS:
            return None
        raise DataValidationError(f"column {name!r} may not be empty")
    if name in ("sum_of_cr", "distance_to_validity_end"):
        return float(text)
    return int(text)


def _validate_requested_columns(requested: Sequence[str]) -> None:
    unknown = [c for c in requested if c not in FEATURE_COLUMNS]
    if unknown:
        raise DataValidationError(
            "unknown feature column(s): " + ", ".join(repr(c) for c in unknown)
        )
    if "study_right_id" not in requested:
        raise DataValidationError("requested columns must include study_right_id")


def extract_features(registry: Registry, observation_date: dt.date,
                     label_horizon: dt.date | None = None, *,
                     columns: Sequence[str] | None = None,
                     policy: PrivacyPolicy | None = None,
                     audit_log: AuditLog | None = None,
                     include_boundary_start: bool = False) -> FeatureTable:
    """Build the feature table for the cohort at ``observation_date``.

    The requested columns (default: the full canonical schema) must pass
    the privacy gate before anything is read; a denial aborts extraction
    with no output.  ``label_horizon`` enables the ``graduated`` label:
    1 iff the graduation date exists and is on or before the horizon.
    """
    requested = tuple(columns) if columns is not None else FEATURE_COLUMNS
    manifest = check_columns(requested, policy or default_policy(),
                             purpose="feature_extraction", audit_log=audit_log)
    _validate_requested_columns(requested)

    if label_horizon is not None and label_horizon < observation_date:
        raise DataValidationError(
            f"label horizon {label_horizon} precedes observation date {observation_date}"
        )

    graduation_cutoff = add_years(observation_date, GRADUATION_WINDOW_YEARS)
    cohort = filter_cohort(registry, observation_date,
                           include_boundary_start=include_boundary_start)
    rows = []
    for right in cohort:
        rows.append(_build_row(registry, right, observation_date,
                               label_horizon, graduation_cutoff))
    return FeatureTable(
        observation_date=observation_date,
        rows=tuple(rows),
        manifest=manifest,
        label_horizon=label_horizon,
    )


def _build_row(registry: Registry, right: StudyRight, observation_date: dt.date,
               label_horizon: dt.date | None, graduation_cutoff: dt.date) -> FeatureRow:
    student = registry.students_by_id[right.student_id]
    events = registry.credits_by_right.get(right.study_right_id, ())

    graduated = None
    if label_horizon is not None:
        graduated = int(right.graduation_date is not None
                        and right.graduation_date <= label_horizon)
    graduates_in_4y = int(right.graduation_date is not None
                          and right.graduation_date <= graduation_cutoff)
    semesters = None
    if right.graduation_date is not None and right.graduation_date > observation_date:
        semesters = semesters_between(observation_date, right.graduation_date)

    return FeatureRow(
        study_right_id=right.study_right_id,
        gender_female=int(student.gender is Gender.FEMALE),
        gender_male=int(student.gender is Gender.MALE),
        field_engineering=int(right.field is StudyField.ENGINEERING),
        field_arts_and_design=int(right.field is StudyField.ARTS_AND_DESIGN),
        field_business=int(right.field is StudyField.BUSINESS),
        sum_of_cr=sum_credits(events, observation_date),
        no_credits_in_18m=no_credits_window(events, observation_date),
        distance_to_validity_end=distance_to_validity_end(right.start_date, observation_date),
        graduated=graduated,
        graduates_in_4y=graduates_in_4y,
        semesters_to_degree=semesters,
    )


def load_feature_table(path: str | Path, *,
                       observation_date: dt.date | None = None,
                       label_horizon: dt.date | None = None,
                       purpose: str = "feature_extraction",
                       policy: PrivacyPolicy | None = None,
                       audit_log: AuditLog | None = None) -> FeatureTable:
    """Read a feature table written by ``FeatureTable.to_csv``.

    Requires the full canonical header.  The observation date is not
    stored in the CSV, so callers that need it (training) pass it in.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            raw_rows = list(reader)
    except OSError as exc:
        raise DataValidationError(f"cannot read {path}: {exc}") from exc
    if not raw_rows or tuple(raw_rows[0]) != FEATURE_COLUMNS:
        raise DataValidationError(
            f"{path}: expected header {','.join(FEATURE_COLUMNS)}"
        )
    manifest = check_columns(FEATURE_COLUMNS, policy or default_policy(),
                             purpose=purpose, audit_log=audit_log)
    rows = []
    for lineno, raw in enumerate(raw_rows[1:], start=2):
        if not raw:
            continue
        if len(raw) != len(FEATURE_COLUMNS):
            raise DataValidationError(
                f"{path}:{lineno}: expected {len(FEATURE_COLUMNS)} fields, got {len(raw)}"
            )
        try:
            values = {name: _parse_cell(name, text)
                      for name, text in zip(FEATURE_COLUMNS, raw)}
        except ValueError as exc:
            raise DataValidationError(f"{path}:{lineno}: {exc}") from exc
        rows.append(FeatureRow(**values))
    return FeatureTable(
        observation_date=observation_date,
        rows=tuple(rows),
        manifest=manifest,
        label_horizon=label_horizon,
    )
