"""Regression fitting from first principles.

Two families are supported:

* ordinary least squares, solved through a Householder QR factorization
  of the design matrix (never the normal equations), with classical
  t-based inference;
* binary logistic regression by iteratively reweighted least squares
  (Newton-Raphson), started from the zero vector, with step-halving so
  the log-likelihood never decreases between iterations, and Wald
  z-based inference from the observed information.

Coefficients are reported on the raw covariate scale (no
standardization) so they remain directly comparable across fits and
against externally published coefficient tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats
from scipy.linalg import solve_triangular

from .errors import DataValidationError, RankDeficiencyError, SeparationError

CONSTANT_TERM = "constant"

#: Coefficient magnitude beyond which a logistic fit is declared separated.
SEPARATION_BOUND = 1e3

MCFADDEN = "mcfadden_pseudo"
COEFF_OF_DETERMINATION = "coefficient_of_determination"


@dataclass(frozen=True)
class RSquared:
    value: float
    kind: str


@dataclass(frozen=True)
class FitResult:
    coefficients: dict[str, float]
    standard_errors: dict[str, float]
    p_values: dict[str, float]
    log_likelihood: float | None
    r_squared: RSquared
    n: int
    converged: bool
    iterations: int
    dropped_terms: tuple[str, ...] = ()
    #: Log-likelihood after each IRLS iteration (diagnostic; empty for OLS).
    ll_trace: tuple[float, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class DesignMatrix:
    """Named design matrix with its response vector.

    The first column must be the all-ones constant.  Rows are cases,
    columns are terms; arrays are copied and frozen on construction.
    """

    column_names: tuple[str, ...]
    values: np.ndarray
    response: np.ndarray

    def __post_init__(self):
        names = tuple(self.column_names)
        x = np.array(self.values, dtype=float, copy=True)
        y = np.array(self.response, dtype=float, copy=True)
        if x.ndim != 2:
            raise DataValidationError("design values must be a 2-d matrix")
        if not names or names[0] != CONSTANT_TERM:
            raise DataValidationError(f"first design column must be {CONSTANT_TERM!r}")
        if len(set(names)) != len(names):
            raise DataValidationError("duplicate design column names")
        if x.shape[1] != len(names):
            raise DataValidationError(
                f"{len(names)} column names but {x.shape[1]} value columns"
            )
        if y.shape != (x.shape[0],):
            raise DataValidationError("response length does not match row count")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise DataValidationError("design contains non-finite entries")
        if x.shape[0] < x.shape[1]:
            raise DataValidationError(
                f"fewer rows ({x.shape[0]}) than columns ({x.shape[1]})"
            )
        if not np.allclose(x[:, 0], 1.0):
            raise DataValidationError("constant column must be all ones")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "values", x)
        object.__setattr__(self, "response", y)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def drop_column(self, name: str) -> "DesignMatrix":
        if name == CONSTANT_TERM:
            raise DataValidationError("cannot drop the constant column")
        if name not in self.column_names:
            raise DataValidationError(f"no design column named {name!r}")
        keep = [i for i, c in enumerate(self.column_names) if c != name]
        return DesignMatrix(
            column_names=tuple(self.column_names[i] for i in keep),
            values=self.values[:, keep],
            response=self.response,
        )


def _qr_lstsq(a: np.ndarray, b: np.ndarray, names: tuple[str, ...]):
    """Least-squares solve via reduced QR; returns (solution, R factor).

    Raises RankDeficiencyError naming the first column whose R diagonal
    collapses (for a duplicated column that is the later duplicate).
    """
    q, r = np.linalg.qr(a, mode="reduced")
    diag = np.abs(np.diag(r))
    tol = max(a.shape) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    deficient = np.nonzero(diag <= tol)[0]
    if deficient.size:
        raise RankDeficiencyError(names[int(deficient[0])])
    solution = solve_triangular(r, q.T @ b, lower=False)
    return solution, r


def _covariance_from_r(r: np.ndarray) -> np.ndarray:
    """(A^T A)^-1 from the R factor of A = QR."""
    r_inv = solve_triangular(r, np.eye(r.shape[0]), lower=False)
    return r_inv @ r_inv.T


def fit_linear(design: DesignMatrix) -> FitResult:
    """Ordinary least squares with t-based standard errors and p-values."""
    x, y = design.values, design.response
    names = design.column_names
    n, p = x.shape

    beta, r_factor = _qr_lstsq(x, y, names)
    residuals = y - x @ beta
    sse = float(residuals @ residuals)
    centered = y - y.mean()
    sst = float(centered @ centered)
    if sst > 0.0:
        r_squared = 1.0 - sse / sst
    else:
        r_squared = 1.0
    # Clamp away tiny negative rounding on exact fits.
    r_squared = min(1.0, max(0.0, r_squared))

    df = n - p
    if df > 0:
        sigma2 = sse / df
        cov = sigma2 * _covariance_from_r(r_factor)
        ses = np.sqrt(np.diag(cov))
        with np.errstate(divide="ignore", invalid="ignore"):
            t_stats = beta / ses
        p_values = 2.0 * stats.t.sf(np.abs(t_stats), df)
    else:
        ses = np.full(p, math.nan)
        p_values = np.full(p, math.nan)

    return FitResult(
        coefficients=dict(zip(names, beta.tolist())),
        standard_errors=dict(zip(names, ses.tolist())),
        p_values=dict(zip(names, p_values.tolist())),
        log_likelihood=None,
        r_squared=RSquared(value=r_squared, kind=COEFF_OF_DETERMINATION),
        n=n,
        converged=True,
        iterations=1,
    )


def _log_likelihood(eta: np.ndarray, y: np.ndarray) -> float:
    """Bernoulli log-likelihood at linear predictor eta, computed stably."""
    return float(y @ eta - np.logaddexp(0.0, eta).sum())


def fit_logistic(design: DesignMatrix, max_iter: int = 50, tol: float = 1e-10) -> FitResult:
    """Maximum-likelihood logistic regression via IRLS.

    Starts from all-zero coefficients and declares convergence when the
    largest absolute coefficient change falls below ``tol``.  Complete
    separation (any coefficient beyond ``SEPARATION_BOUND``) and
    non-convergence raise SeparationError, distinct from data errors.
    """
    x, y = design.values, design.response
    names = design.column_names
    n, p = x.shape

    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise DataValidationError("logistic response must be binary 0/1")
    if classes.size < 2:
        raise DataValidationError(
            f"single-class response (all {int(classes[0])}); cannot fit logistic model"
        )

    beta = np.zeros(p)
    eta = x @ beta
    ll = _log_likelihood(eta, y)
    trace = [ll]
    converged = False
    iterations = 0
    step = math.inf

    for iterations in range(1, max_iter + 1):
        mu = _sigmoid(eta)
        w = np.clip(mu * (1.0 - mu), 1e-12, None)
        sw = np.sqrt(w)
        # Weighted working response: z = eta + (y - mu) / w.
        a = x * sw[:, None]
        b = sw * eta + (y - mu) / sw
        candidate, _ = _qr_lstsq(a, b, names)

        # Step-halving: never let the log-likelihood decrease.
        new_ll = _log_likelihood(x @ candidate, y)
        halvings = 0
        while new_ll < ll and halvings < 30:
            candidate = 0.5 * (beta + candidate)
            new_ll = _log_likelihood(x @ candidate, y)
            halvings += 1
        if new_ll < ll:
            break

        step = float(np.max(np.abs(candidate - beta)))
        beta = candidate
        eta = x @ beta
        ll = new_ll
        trace.append(ll)

        if float(np.max(np.abs(beta))) > SEPARATION_BOUND:
            raise SeparationError(
                f"coefficient magnitude exceeded {SEPARATION_BOUND:g} after "
                f"{iterations} iterations; data are likely completely separated"
            )
        if step < tol:
            converged = True
            break

    if not converged:
        raise SeparationError(
            f"IRLS did not converge in {max_iter} iterations "
            f"(last step {step:g}); possible quasi-separation"
        )

    mu = _sigmoid(eta)
    w = np.clip(mu * (1.0 - mu), 1e-12, None)
    # Observed information is X^T W X; take its inverse through QR of sqrt(W) X.
    r_factor = np.linalg.qr(x * np.sqrt(w)[:, None], mode="r")
    cov = _covariance_from_r(r_factor)
    ses = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        z_stats = beta / ses
    p_values = 2.0 * stats.norm.sf(np.abs(z_stats))

    p_bar = float(y.mean())
    ll_null = n * (p_bar * math.log(p_bar) + (1.0 - p_bar) * math.log(1.0 - p_bar))

    return FitResult(
        coefficients=dict(zip(names, beta.tolist())),
        standard_errors=dict(zip(names, ses.tolist())),
        p_values=dict(zip(names, p_values.tolist())),
        log_likelihood=ll,
        r_squared=RSquared(value=mcfadden_r2(ll, ll_null), kind=MCFADDEN),
        n=n,
        converged=True,
        iterations=iterations,
        ll_trace=tuple(trace),
    )


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(eta, dtype=float)
    positive = eta >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-eta[positive]))
    exp_eta = np.exp(eta[~positive])
    out[~positive] = exp_eta / (1.0 + exp_eta)
    return out


def mcfadden_r2(log_likelihood_model: float, log_likelihood_null: float) -> float:
    """McFadden pseudo-R-squared: 1 - lnL(model) / lnL(null)."""
    if log_likelihood_model > 1e-12 or log_likelihood_null > 1e-12:
        raise DataValidationError("log-likelihoods must be non-positive")
    if log_likelihood_null == 0.0:
        raise DataValidationError("null log-likelihood of zero is degenerate")
    return 1.0 - log_likelihood_model / log_likelihood_null


def backward_eliminate(design: DesignMatrix, family: str, alpha: float = 0.05) -> FitResult:
    """Backward elimination by Wald/t p-value.

    Refits after each drop, removing the non-constant term with the
    largest p-value at or above ``alpha``, one per round, until every
    remaining non-constant term is significant.  Exact p-value ties are
    broken in favour of dropping the earlier column in the original
    ordering.  The constant is never dropped.
    """
    fitters = {"linear": fit_linear, "logistic": fit_logistic}
    if family not in fitters:
        raise DataValidationError(f"unknown family {family!r}; expected linear or logistic")
    if not 0.0 < alpha < 1.0:
        raise DataValidationError(f"alpha must be in (0, 1), got {alpha}")
    fitter = fitters[family]

    original_order = {name: i for i, name in enumerate(design.column_names)}
    current = design
    dropped: list[str] = []
    while True:
        result = fitter(current)
        candidates = [
            (result.p_values[name], original_order[name], name)
            for name in current.column_names
            if name != CONSTANT_TERM and result.p_values[name] >= alpha
        ]
        if not candidates:
            return replace(result, dropped_terms=tuple(dropped))
        candidates.sort(key=lambda item: (-item[0], item[1]))
        victim = candidates[0][2]
        dropped.append(victim)
        current = current.drop_column(victim)
