"""Binary classification metrics and median [min, max] aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

METRICS = ("precision", "recall", "f1")


@dataclass(frozen=True)
class MetricReport:
    precision: float
    recall: float
    f1: float
    flags: tuple[str, ...] = ()

    def to_json(self) -> dict:
        out = {m: getattr(self, m) for m in METRICS}
        if self.flags:
            out["flags"] = list(self.flags)
        return out


@dataclass(frozen=True)
class Aggregate:
    median: float
    low: float
    high: float

    def __str__(self):
        return f"{self.median:.2f} [{self.low:.2f}, {self.high:.2f}]"

    def to_json(self) -> dict:
        return {"median": self.median, "min": self.low, "max": self.high}


@dataclass(frozen=True)
class AggregatedReport:
    precision: Aggregate
    recall: Aggregate
    f1: Aggregate
    n_runs: int = field(default=1)

    def to_json(self) -> dict:
        out = {m: getattr(self, m).to_json() for m in METRICS}
        out["n_runs"] = self.n_runs
        return out


def classification_metrics(y_true, y_prob, threshold: float = 0.5) -> MetricReport:
    """Precision, recall and F1 of the positive class at ``threshold``.

    Zero denominators give 0 and add a flag naming the metric.
    """
    y_true = np.asarray(y_true).astype(int).ravel()
    y_pred = (np.asarray(y_prob, dtype=float).ravel() >= threshold).astype(int)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_prob must have equal length")
    tp = int(np.sum((y_pred == 1) & (y_true == 1)))
    fp = int(np.sum((y_pred == 1) & (y_true == 0)))
    fn = int(np.sum((y_pred == 0) & (y_true == 1)))
    flags = []
    if tp + fp:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        flags.append("precision_undefined")
    if tp + fn:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        flags.append("recall_undefined")
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
    return MetricReport(precision, recall, f1, tuple(flags))


def lower_median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def aggregate(reports: Sequence[MetricReport]) -> AggregatedReport:
    """Elementwise median (lower median for even counts) with min and max."""
    if not reports:
        raise ValueError("need at least one report")
    parts = {}
    for m in METRICS:
        vals = [getattr(r, m) for r in reports]
        parts[m] = Aggregate(lower_median(vals), min(vals), max(vals))
    return AggregatedReport(n_runs=len(reports), **parts)
