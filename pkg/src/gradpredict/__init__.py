"""Graduation probability and time-to-degree prediction from registry data.

The package covers the full pipeline: loading and validating a student
registry, selecting the cohort observable at a parameterized date,
extracting covariates and labels, fitting the logistic/linear models,
two-stage prediction, group-level aggregation, privacy gating with an
audit trail, accuracy evaluation, and emission of SQL views embedding
the fitted coefficients for warehouse use.
"""

from .codegen import SqlViewSpec, emit_sql_view, emit_two_stage_sql
from .errors import (
    DataValidationError,
    GradPredictError,
    NumericalFitError,
    PrivacyDeniedError,
    RankDeficiencyError,
    SeparationError,
)
from .featurize import (
    COVARIATE_COLUMNS,
    FEATURE_COLUMNS,
    MODEL_TERMS,
    FeatureRow,
    FeatureTable,
    distance_to_validity_end,
    extract_features,
    load_feature_table,
    no_credits_window,
    semesters_between,
    sum_credits,
)
from .glm import (
    DesignMatrix,
    FitResult,
    RSquared,
    backward_eliminate,
    fit_linear,
    fit_logistic,
    mcfadden_r2,
)
from .metrics import BandReport, ConfusionCounts, confusion_counts, precision_bands
from .pipeline import (
    ModelArtifact,
    PredictionCategory,
    PredictionOutcome,
    expected_graduates,
    load_artifact,
    predict_two_stage,
    reference_artifact,
    save_artifact,
    score,
    train_model,
)
from .privacy import (
    AuditLog,
    ColumnManifest,
    PrivacyPolicy,
    check_columns,
    default_policy,
    load_policy,
)
from .registry import (
    CreditEvent,
    Gender,
    Registry,
    RightType,
    Student,
    StudyField,
    StudyRight,
    filter_cohort,
    load_registry,
    load_registry_dir,
    write_registry,
)
from .synthgen import GenConfig, SplitMix64, generate_population

__version__ = "0.1.0"

__all__ = [
    "AuditLog",
    "BandReport",
    "COVARIATE_COLUMNS",
    "ColumnManifest",
    "ConfusionCounts",
    "CreditEvent",
    "DataValidationError",
    "DesignMatrix",
    "FEATURE_COLUMNS",
    "FeatureRow",
    "FeatureTable",
    "FitResult",
    "GenConfig",
    "Gender",
    "GradPredictError",
    "MODEL_TERMS",
    "ModelArtifact",
    "NumericalFitError",
    "PredictionCategory",
    "PredictionOutcome",
    "PrivacyDeniedError",
    "PrivacyPolicy",
    "RSquared",
    "RankDeficiencyError",
    "Registry",
    "RightType",
    "SeparationError",
    "SplitMix64",
    "SqlViewSpec",
    "Student",
    "StudyField",
    "StudyRight",
    "backward_eliminate",
    "check_columns",
    "confusion_counts",
    "default_policy",
    "distance_to_validity_end",
    "emit_sql_view",
    "emit_two_stage_sql",
    "expected_graduates",
    "extract_features",
    "filter_cohort",
    "fit_linear",
    "fit_logistic",
    "generate_population",
    "load_artifact",
    "load_feature_table",
    "load_policy",
    "load_registry",
    "load_registry_dir",
    "mcfadden_r2",
    "no_credits_window",
    "precision_bands",
    "predict_two_stage",
    "reference_artifact",
    "save_artifact",
    "score",
    "semesters_between",
    "sum_credits",
    "train_model",
    "write_registry",
]
