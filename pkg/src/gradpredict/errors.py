"""Exception taxonomy shared by all modules.

The classes mirror the CLI exit-code classes: data/validation problems,
numerical fitting failures, and privacy denials are distinguishable so
callers (and scripted pipelines) can branch on the failure kind.
"""

from __future__ import annotations


class GradPredictError(Exception):
    """Base class for all errors raised by this package."""


class DataValidationError(GradPredictError):
    """Malformed, inconsistent, or out-of-contract input data."""


class NumericalFitError(GradPredictError):
    """A model fit failed numerically."""


class RankDeficiencyError(NumericalFitError):
    """Design matrix columns are linearly dependent."""

    def __init__(self, column: str, message: str | None = None):
        self.column = column
        super().__init__(message or f"design matrix is rank deficient at column {column!r}")


class SeparationError(NumericalFitError):
    """Logistic fit diverged: complete separation or non-convergence."""


class PrivacyDeniedError(GradPredictError):
    """A column request was denied by the privacy policy (fail-closed)."""

    def __init__(self, denied_columns: tuple[str, ...], message: str):
        self.denied_columns = denied_columns
        super().__init__(message)
