"""Prediction accuracy evaluation.

Time-to-degree predictions are compared against actual semesters after
rounding to whole semesters (half away from zero); accuracy is reported
as the share of cases falling within widening semester bands.  Binary
classifiers are summarized with plain confusion counts at a threshold.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import DataValidationError

#: Accuracy reported for the reference time-to-degree model on the
#: original institutional registry (same semester / +-1 / +-2).  That
#: registry is private, so these are documentation values, never test
#: targets.
REFERENCE_TIME_TO_DEGREE_ACCURACY = {
    "same_semester": 19.5,
    "within_1": 54.9,
    "within_2": 78.9,
}


def round_half_away_from_zero(value: float) -> int:
    """Round to the nearest integer, halves away from zero."""
    if value >= 0:
        return int(math.floor(value + 0.5))
    return int(math.ceil(value - 0.5))


def band_name(width: int) -> str:
    return "same_semester" if width == 0 else f"within_{width}"


@dataclass(frozen=True)
class BandReport:
    percentages: dict[str, float]  # band name -> percent of cases
    n: int

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["band", "percentage"])
            for name, pct in self.percentages.items():
                writer.writerow([name, repr(pct)])

    def to_text(self) -> str:
        lines = [f"n = {self.n}"]
        for name, pct in self.percentages.items():
            lines.append(f"{name}: {pct:.1f}%")
        return "\n".join(lines)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int
    threshold: float

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def precision_bands(predicted: Sequence[float], actual: Sequence[int],
                    bands: Sequence[int] = (0, 1, 2)) -> BandReport:
    """Share of predictions within each semester band of the actual value.

    Each prediction is rounded half-away-from-zero to whole semesters;
    band ``k`` counts cases with ``|rounded - actual| <= k``.
    """
    if len(predicted) != len(actual):
        raise DataValidationError(
            f"length mismatch: {len(predicted)} predictions vs {len(actual)} actuals"
        )
    if not predicted:
        raise DataValidationError("cannot evaluate an empty prediction set")
    widths = sorted(set(int(b) for b in bands))
    if any(w < 0 for w in widths):
        raise DataValidationError("band widths must be non-negative")

    errors = [abs(round_half_away_from_zero(p) - int(a))
              for p, a in zip(predicted, actual)]
    n = len(errors)
    percentages = {
        band_name(width): 100.0 * sum(1 for e in errors if e <= width) / n
        for width in widths
    }
    return BandReport(percentages=percentages, n=n)


def confusion_counts(probabilities: Sequence[float], labels: Sequence[int],
                     threshold: float) -> ConfusionCounts:
    """Tally the confusion matrix, predicting positive at p >= threshold."""
    if len(probabilities) != len(labels):
        raise DataValidationError(
            f"length mismatch: {len(probabilities)} probabilities vs {len(labels)} labels"
        )
    tp = fp = tn = fn = 0
    for p, y in zip(probabilities, labels):
        if not 0.0 <= p <= 1.0:
            raise DataValidationError(f"probability {p} outside [0, 1]")
        if y not in (0, 1):
            raise DataValidationError(f"label {y!r} is not binary")
        positive = p >= threshold
        if positive and y == 1:
            tp += 1
        elif positive and y == 0:
            fp += 1
        elif not positive and y == 1:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn, threshold=threshold)
