"""Regenerate the golden regression fixtures.

Run offline (``python tests/golden/make_golden.py``); not collected by
pytest.  Produces seeded datasets plus reference fits from statsmodels,
an implementation independent of this package.  The committed outputs
are what the test suite asserts against, so rerunning this script is
only needed if the fixtures are deliberately changed.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent


def _write_csv(path: Path, header: list[str], matrix: np.ndarray) -> None:
    lines = [",".join(header)]
    for row in matrix:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def make_linear() -> None:
    rng = np.random.RandomState(20240811)
    n = 200
    x1 = rng.normal(1.0, 2.0, n)
    x2 = rng.uniform(0.0, 3.0, n)
    x3 = rng.binomial(1, 0.4, n).astype(float)
    y = 1.5 + 0.8 * x1 - 2.0 * x2 + 0.6 * x3 + rng.normal(0.0, 0.7, n)
    _write_csv(HERE / "linear_n200.csv", ["x1", "x2", "x3", "y"],
               np.column_stack([x1, x2, x3, y]))

    import statsmodels.api as sm
    design = sm.add_constant(np.column_stack([x1, x2, x3]))
    fit = sm.OLS(y, design).fit()
    names = ["constant", "x1", "x2", "x3"]
    (HERE / "linear_n200_expected.json").write_text(json.dumps({
        "coefficients": dict(zip(names, fit.params.tolist())),
        "standard_errors": dict(zip(names, fit.bse.tolist())),
        "p_values": dict(zip(names, fit.pvalues.tolist())),
        "r_squared": float(fit.rsquared),
    }, indent=2) + "\n", encoding="utf-8")


def make_logistic() -> None:
    rng = np.random.RandomState(20240812)
    n = 1000
    x1 = rng.normal(0.0, 1.0, n)
    x2 = rng.uniform(-1.0, 2.0, n)
    x3 = rng.binomial(1, 0.5, n).astype(float)
    x4 = rng.normal(0.5, 1.5, n)
    z = -0.5 + 1.2 * x1 - 0.8 * x2 + 0.5 * x3 + 0.9 * x4
    y = (rng.uniform(size=n) < 1.0 / (1.0 + np.exp(-z))).astype(float)
    _write_csv(HERE / "logistic_n1000.csv", ["x1", "x2", "x3", "x4", "y"],
               np.column_stack([x1, x2, x3, x4, y]))

    import statsmodels.api as sm
    design = sm.add_constant(np.column_stack([x1, x2, x3, x4]))
    fit = sm.Logit(y, design).fit(disp=0, method="newton", tol=1e-12)
    names = ["constant", "x1", "x2", "x3", "x4"]
    (HERE / "logistic_n1000_expected.json").write_text(json.dumps({
        "coefficients": dict(zip(names, fit.params.tolist())),
        "standard_errors": dict(zip(names, fit.bse.tolist())),
        "p_values": dict(zip(names, fit.pvalues.tolist())),
        "log_likelihood": float(fit.llf),
        "log_likelihood_null": float(fit.llnull),
        "mcfadden_r2": float(1.0 - fit.llf / fit.llnull),
    }, indent=2) + "\n", encoding="utf-8")


def make_elimination() -> None:
    """Strong two-signal linear design plus one pure-noise column."""
    rng = np.random.RandomState(20240813)
    n = 300
    x1 = rng.normal(0.0, 1.0, n)
    x2 = rng.uniform(-2.0, 2.0, n)
    noise = rng.normal(0.0, 1.0, n)  # unrelated to y
    y = 2.0 + 1.5 * x1 - 1.1 * x2 + rng.normal(0.0, 0.8, n)
    _write_csv(HERE / "elimination_n300.csv", ["x1", "x2", "noise", "y"],
               np.column_stack([x1, x2, noise, y]))

    import statsmodels.api as sm
    design = sm.add_constant(np.column_stack([x1, x2, noise]))
    fit = sm.OLS(y, design).fit()
    names = ["constant", "x1", "x2", "noise"]
    (HERE / "elimination_n300_expected.json").write_text(json.dumps({
        "p_values": dict(zip(names, fit.pvalues.tolist())),
    }, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    make_linear()
    make_logistic()
    make_elimination()
    print("golden fixtures written to", HERE)
