"""Model training, scoring, two-stage prediction, and artifact files.

Three models are orchestrated here:

* PM1 (logistic): probability of ever graduating, trained against the
  ``graduated`` label at a horizon of at least eight years;
* PM2 (logistic): probability of graduating within four years of the
  observation date;
* PM3 (linear): semesters to degree, trained only on the rows that
  actually graduated within four years.

Each starts from the full standard covariate set plus a constant and is
reduced by backward elimination.  Fitted artifacts and externally
published coefficient sets (the shipped reference files) are scored
through the same code path.
"""

from __future__ import annotations

import datetime as dt
import enum
import json
import math
import os
import warnings
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .dates import add_years
from .errors import DataValidationError
from .featurize import COVARIATE_COLUMNS, MODEL_TERMS, FeatureRow, FeatureTable
from .glm import (
    COEFF_OF_DETERMINATION,
    CONSTANT_TERM,
    MCFADDEN,
    DesignMatrix,
    FitResult,
    RSquared,
    backward_eliminate,
)

ARTIFACT_SCHEMA_VERSION = 1

#: r_squared kind used by shipped reference artifacts whose source did
#: not state which statistic was reported.
UNREPORTED = "unreported"

_ARTIFACT_RSQUARED_KINDS = (MCFADDEN, COEFF_OF_DETERMINATION, UNREPORTED)

KNOWN_MODEL_FAMILIES = {"PM1": "logistic", "PM2": "logistic", "PM3": "linear"}

#: Text used for the below-threshold category in exports and SQL.
FOUR_YEARS_OR_MORE_PHRASE = "four years or more"

PM1_HORIZON_YEARS = 8


class PredictionCategory(enum.Enum):
    NUMERIC = "numeric"
    FOUR_YEARS_OR_MORE = "four_years_or_more"


@dataclass(frozen=True)
class ModelArtifact:
    model_id: str
    family: str  # "logistic" | "linear"
    coefficients: dict[str, float]  # ordered, starts with "constant"
    dropped_terms: tuple[str, ...]
    observation_date: dt.date | None
    n: int
    r_squared: RSquared
    created_at: dt.datetime
    schema_version: int = ARTIFACT_SCHEMA_VERSION

    def __post_init__(self):
        if self.family not in ("logistic", "linear"):
            raise DataValidationError(f"unknown model family {self.family!r}")
        expected = KNOWN_MODEL_FAMILIES.get(self.model_id)
        if expected is not None and self.family != expected:
            raise DataValidationError(
                f"{self.model_id} must be {expected}, got {self.family!r}"
            )
        if CONSTANT_TERM not in self.coefficients:
            raise DataValidationError("artifact coefficients must include the constant")
        for term in list(self.coefficients) + list(self.dropped_terms):
            if term != CONSTANT_TERM and term not in COVARIATE_COLUMNS:
                raise DataValidationError(f"unknown covariate term {term!r}")
        if self.r_squared.kind not in _ARTIFACT_RSQUARED_KINDS:
            raise DataValidationError(f"unknown r_squared kind {self.r_squared.kind!r}")

    @property
    def terms(self) -> tuple[str, ...]:
        return tuple(self.coefficients)


@dataclass(frozen=True)
class PredictionOutcome:
    study_right_id: str
    p_graduate_4y: float
    time_to_degree: float | None
    category: PredictionCategory
    p_graduate: float | None = None

    def __post_init__(self):
        numeric = self.category is PredictionCategory.NUMERIC
        if numeric != (self.time_to_degree is not None):
            raise DataValidationError(
                "time_to_degree must be present exactly when the category is numeric"
            )


def _default_created_at() -> dt.datetime:
    """Creation timestamp; honors SOURCE_DATE_EPOCH for reproducible runs."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        return dt.datetime.fromtimestamp(int(epoch), tz=dt.timezone.utc)
    return dt.datetime.now(tz=dt.timezone.utc)


def _design_for(rows: list[FeatureRow], response: list[float]) -> DesignMatrix:
    names = (CONSTANT_TERM,) + MODEL_TERMS
    values = np.empty((len(rows), len(names)))
    values[:, 0] = 1.0
    for j, term in enumerate(MODEL_TERMS, start=1):
        values[:, j] = [float(getattr(row, term)) for row in rows]
    return DesignMatrix(column_names=names, values=values, response=np.asarray(response))


def train_model(model_id: str, feature_table: FeatureTable, alpha: float = 0.05,
                created_at: dt.datetime | None = None) -> ModelArtifact:
    """Fit one of PM1/PM2/PM3 on a labelled feature table.

    The design always starts from the full standard term set plus the
    constant; backward elimination at ``alpha`` decides what stays.
    """
    canonical_id = model_id.upper()
    if canonical_id not in KNOWN_MODEL_FAMILIES:
        raise DataValidationError(
            f"unknown model id {model_id!r}; expected one of PM1, PM2, PM3"
        )
    family = KNOWN_MODEL_FAMILIES[canonical_id]
    if feature_table.observation_date is None:
        raise DataValidationError(
            "feature table has no observation date; supply one when loading it"
        )
    if not feature_table.rows:
        raise DataValidationError("cannot train on an empty feature table")

    if canonical_id == "PM1":
        if any(row.graduated is None for row in feature_table.rows):
            raise DataValidationError(
                "PM1 needs the graduated label; extract with a label horizon"
            )
        horizon = feature_table.label_horizon
        if horizon is not None:
            required = add_years(feature_table.observation_date, PM1_HORIZON_YEARS)
            if horizon < required:
                warnings.warn(
                    f"PM1 label horizon {horizon} is less than {PM1_HORIZON_YEARS} "
                    f"years after the observation date; late graduations will be "
                    f"mislabelled as non-graduating",
                    stacklevel=2,
                )
        rows = list(feature_table.rows)
        response = [float(row.graduated) for row in rows]
    elif canonical_id == "PM2":
        if any(row.graduates_in_4y is None for row in feature_table.rows):
            raise DataValidationError("PM2 needs the graduates_in_4y label")
        rows = list(feature_table.rows)
        response = [float(row.graduates_in_4y) for row in rows]
    else:  # PM3
        if any(row.graduates_in_4y is None for row in feature_table.rows):
            raise DataValidationError(
                "PM3 needs graduates_in_4y to select its training subset"
            )
        rows = [row for row in feature_table.rows if row.graduates_in_4y == 1]
        if not rows:
            raise DataValidationError("PM3 has no rows with graduates_in_4y = 1")
        if any(row.semesters_to_degree is None for row in rows):
            raise DataValidationError(
                "PM3 needs semesters_to_degree on every graduates_in_4y = 1 row"
            )
        response = [float(row.semesters_to_degree) for row in rows]

    design = _design_for(rows, response)
    result = backward_eliminate(design, family=family, alpha=alpha)
    return artifact_from_fit(canonical_id, family, result,
                             observation_date=feature_table.observation_date,
                             created_at=created_at)


def artifact_from_fit(model_id: str, family: str, fit: FitResult, *,
                      observation_date: dt.date | None,
                      created_at: dt.datetime | None = None) -> ModelArtifact:
    return ModelArtifact(
        model_id=model_id,
        family=family,
        coefficients=dict(fit.coefficients),
        dropped_terms=tuple(fit.dropped_terms),
        observation_date=observation_date,
        n=fit.n,
        r_squared=fit.r_squared,
        created_at=created_at if created_at is not None else _default_created_at(),
    )


def _covariates_of(feature_row) -> Mapping[str, float]:
    if isinstance(feature_row, FeatureRow):
        return feature_row.covariates()
    return feature_row


def score(artifact: ModelArtifact, feature_row) -> float:
    """Evaluate the artifact on one row of covariates.

    Logistic artifacts return the probability sigmoid(z); linear ones
    return the linear predictor itself.  Stable for |z| up to ~700.
    """
    covariates = _covariates_of(feature_row)
    z = artifact.coefficients[CONSTANT_TERM]
    for term, coefficient in artifact.coefficients.items():
        if term == CONSTANT_TERM:
            continue
        try:
            value = covariates[term]
        except KeyError:
            raise DataValidationError(
                f"row is missing covariate {term!r} required by {artifact.model_id}"
            ) from None
        z += coefficient * float(value)
    if artifact.family == "linear":
        return z
    return _sigmoid_scalar(z)


def _sigmoid_scalar(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def predict_two_stage(pm2: ModelArtifact, pm3: ModelArtifact, feature_row,
                      threshold: float = 0.5) -> PredictionOutcome:
    """Classify first, then regress time-to-degree for likely graduates.

    At or above the threshold (inclusive) the outcome is numeric with
    the linear model's semester prediction; below it the category is
    "four years or more" with no numeric value.
    """
    if pm2.family != "logistic":
        raise DataValidationError("two-stage prediction needs a logistic first stage")
    if pm3.family != "linear":
        raise DataValidationError("two-stage prediction needs a linear second stage")

    p = score(pm2, feature_row)
    study_right_id = ""
    if isinstance(feature_row, FeatureRow):
        study_right_id = feature_row.study_right_id
    elif isinstance(feature_row, Mapping):
        study_right_id = str(feature_row.get("study_right_id", ""))

    if p >= threshold:
        return PredictionOutcome(
            study_right_id=study_right_id,
            p_graduate_4y=p,
            time_to_degree=score(pm3, feature_row),
            category=PredictionCategory.NUMERIC,
        )
    return PredictionOutcome(
        study_right_id=study_right_id,
        p_graduate_4y=p,
        time_to_degree=None,
        category=PredictionCategory.FOUR_YEARS_OR_MORE,
    )


def _group_label(row: FeatureRow, group_key: str) -> str:
    if group_key == "all":
        return "all"
    if group_key == "field":
        if row.field_engineering:
            return "engineering"
        if row.field_arts_and_design:
            return "arts_and_design"
        return "business"
    if group_key == "gender":
        if row.gender_female:
            return "female"
        if row.gender_male:
            return "male"
        return "unspecified"
    raise DataValidationError(
        f"unknown group key {group_key!r}; expected field, gender, or all"
    )


def expected_graduates(artifact: ModelArtifact, feature_table: FeatureTable,
                       group_key: str = "all") -> dict[str, float]:
    """Expected graduate counts per group: the sum of scored probabilities.

    Group-level aggregation is the supported use of these predictions;
    a linear artifact is rejected because its scores are not
    probabilities.
    """
    if artifact.family != "logistic":
        raise DataValidationError("expected_graduates requires a logistic artifact")
    totals: dict[str, float] = {}
    for row in feature_table.rows:
        label = _group_label(row, group_key)
        totals[label] = totals.get(label, 0.0) + score(artifact, row)
    return totals


def save_artifact(artifact: ModelArtifact, path: str | Path) -> None:
    """Write the artifact JSON; floats round-trip bit-exactly."""
    document = {
        "schema_version": artifact.schema_version,
        "model_id": artifact.model_id,
        "family": artifact.family,
        "coefficients": artifact.coefficients,
        "dropped_terms": list(artifact.dropped_terms),
        "observation_date": (artifact.observation_date.isoformat()
                             if artifact.observation_date else None),
        "n": artifact.n,
        "r_squared": {"value": artifact.r_squared.value, "kind": artifact.r_squared.kind},
        "created_at": artifact.created_at.isoformat(),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=2)
        handle.write("\n")


def load_artifact(path: str | Path) -> ModelArtifact:
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataValidationError(f"cannot read artifact {path}: {exc}") from exc
    return _artifact_from_dict(raw, where=str(path))


def _artifact_from_dict(raw: dict, where: str) -> ModelArtifact:
    try:
        version = raw["schema_version"]
        if version != ARTIFACT_SCHEMA_VERSION:
            raise DataValidationError(
                f"{where}: artifact schema_version {version} "
                f"not supported (expected {ARTIFACT_SCHEMA_VERSION})"
            )
        observation = raw["observation_date"]
        return ModelArtifact(
            model_id=str(raw["model_id"]),
            family=str(raw["family"]),
            coefficients={str(k): float(v) for k, v in raw["coefficients"].items()},
            dropped_terms=tuple(raw["dropped_terms"]),
            observation_date=dt.date.fromisoformat(observation) if observation else None,
            n=int(raw["n"]),
            r_squared=RSquared(value=float(raw["r_squared"]["value"]),
                               kind=str(raw["r_squared"]["kind"])),
            created_at=dt.datetime.fromisoformat(raw["created_at"]),
            schema_version=int(version),
        )
    except DataValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DataValidationError(f"{where}: malformed artifact: {exc}") from exc


def reference_artifact(model_id: str) -> ModelArtifact:
    """Load one of the shipped reference coefficient sets (pm1/pm2/pm3).

    These carry the published coefficients of the original institutional
    deployment; their n and r_squared are metadata about that private
    registry, not reproducible fit results.
    """
    name = model_id.lower()
    if name not in ("pm1", "pm2", "pm3"):
        raise DataValidationError(f"no reference artifact named {model_id!r}")
    resource = resources.files("gradpredict").joinpath(f"reference/{name}.json")
    raw = json.loads(resource.read_text(encoding="utf-8"))
    return _artifact_from_dict(raw, where=f"reference/{name}.json")
