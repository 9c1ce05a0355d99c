"""Overlap and boundary metrics for binary masks, plus CSV reports."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import UndefinedMetricError
from .fields import as_mask

METRICS = ("dice", "sensitivity", "specificity")


def _pair(p, t):
    p, t = as_mask(p), as_mask(t)
    if p.shape != t.shape:
        raise ValueError(f"mask shapes differ: {p.shape} vs {t.shape}")
    return p, t


def dice(p, t) -> float:
    p, t = _pair(p, t)
    total = int(p.sum()) + int(t.sum())
    if total == 0:
        raise UndefinedMetricError("dice undefined: both masks empty")
    return 2.0 * int((p & t).sum()) / total


def sensitivity(p, t) -> float:
    p, t = _pair(p, t)
    n = int(t.sum())
    if n == 0:
        raise UndefinedMetricError("sensitivity undefined: empty ground truth")
    return int((p & t).sum()) / n


def specificity(p, t) -> float:
    p, t = _pair(p, t)
    n = int((~t).sum())
    if n == 0:
        raise UndefinedMetricError("specificity undefined: ground truth covers the grid")
    return int((~p & ~t).sum()) / n


def boundary(m) -> np.ndarray:
    """Foreground pixels with a 4-neighbour outside the mask (off-grid counts as outside)."""
    m = as_mask(m)
    padded = np.pad(m, 1, constant_values=False)
    interior = padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    return m & ~interior


def hausdorff95(p, t, spacing: float = 1.0) -> float:
    """95th percentile of the pooled boundary-to-boundary nearest distances."""
    p, t = _pair(p, t)
    if not p.any() or not t.any():
        raise UndefinedMetricError("hausdorff95 undefined: empty mask")
    bp = np.argwhere(boundary(p)).astype(float)
    bt = np.argwhere(boundary(t)).astype(float)
    d_pt = cKDTree(bt).query(bp)[0]
    d_tp = cKDTree(bp).query(bt)[0]
    return float(np.percentile(np.concatenate([d_pt, d_tp]), 95) * spacing)


@dataclass
class CaseResult:
    case: str
    values: dict
    skipped: dict = field(default_factory=dict)


@dataclass
class EvalReport:
    cases: list = field(default_factory=list)
    with_hausdorff: bool = False

    @property
    def metric_names(self):
        return METRICS + (("hausdorff95",) if self.with_hausdorff else ())

    def add(self, case_id, p, t):
        fns = {"dice": dice, "sensitivity": sensitivity, "specificity": specificity, "hausdorff95": hausdorff95}
        values, skipped = {}, {}
        for name in self.metric_names:
            try:
                values[name] = fns[name](p, t)
            except UndefinedMetricError as err:
                skipped[name] = str(err)
        self.cases.append(CaseResult(str(case_id), values, skipped))

    def sort(self):
        self.cases.sort(key=lambda c: c.case)

    def column(self, name) -> list[float]:
        return [c.values[name] for c in self.cases if name in c.values]

    def mean(self, name) -> float:
        col = self.column(name)
        return math.fsum(col) / len(col) if col else math.nan

    def std(self, name) -> float:
        col = self.column(name)
        if not col:
            return math.nan
        mu = math.fsum(col) / len(col)
        return math.sqrt(math.fsum((v - mu) ** 2 for v in col) / len(col))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        names = self.metric_names
        writer.writerow(["case", *names])

        def fmt(v):
            return "" if v is None or math.isnan(v) else f"{v:.6f}"

        for c in self.cases:
            writer.writerow([c.case, *(fmt(c.values.get(n)) for n in names)])
        writer.writerow(["MEAN", *(fmt(self.mean(n)) for n in names)])
        writer.writerow(["STD", *(fmt(self.std(n)) for n in names)])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def read_report(path) -> dict:
    """Parse a report CSV into ``{case: {metric: value or None}}`` (incl. MEAN/STD)."""
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            case = row.pop("case")
            out[case] = {k: (float(v) if v != "" else None) for k, v in row.items()}
    return out
