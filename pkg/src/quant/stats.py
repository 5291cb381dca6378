"""Paired comparison of two methods over many datasets."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .core import DataError

EXACT_MAX_N = 25
# per-dataset mean accuracies closer than this count as a draw
DRAW_TOLERANCE = 1e-12


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # sum of ranks of the positive differences
    p_value: float
    n: int  # non-zero differences used
    method: str  # "exact", "normal" or "none"


def _exact_null_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    """Number of sign patterns giving each value of the (doubled) positive-rank sum."""
    counts = np.zeros(int(doubled_ranks.sum()) + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(diffs) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired differences.

    Zero differences are dropped and tied magnitudes get average ranks. Up to
    25 non-zero differences the p-value comes from the exact null
    distribution (all sign patterns, tied ranks included); beyond that a
    normal approximation with tie and continuity corrections is used.
    """
    d = np.asarray(diffs, dtype=np.float64)
    d = d[d != 0]
    n = d.size
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, "none")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())

    if n <= EXACT_MAX_N:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = _exact_null_counts(doubled)
        w2 = int(round(2 * w_plus))
        total = float(2**n)
        lower = counts[: w2 + 1].sum() / total
        upper = counts[w2:].sum() / total
        return WilcoxonResult(w_plus, min(1.0, 2.0 * min(lower, upper)), n, "exact")

    mean = n * (n + 1) / 4.0
    _, tie_sizes = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_sizes**3 - tie_sizes)) / 48.0
    z = max(abs(w_plus - mean) - 0.5, 0.0) / math.sqrt(var)
    return WilcoxonResult(w_plus, min(1.0, math.erfc(z / math.sqrt(2.0))), n, "normal")


@dataclass(frozen=True)
class Comparison:
    datasets: tuple[str, ...]
    mean_a: np.ndarray  # per-dataset mean accuracy, resamples averaged
    mean_b: np.ndarray
    mean_diff: float
    wins: int
    draws: int
    losses: int
    wilcoxon: WilcoxonResult

    @property
    def p_value(self) -> float:
        return self.wilcoxon.p_value

    def report(self, name_a="A", name_b="B") -> str:
        w = self.wilcoxon
        lines = [
            f"datasets: {len(self.datasets)}",
            f"mean accuracy {name_a}: {self.mean_a.mean():.6f}",
            f"mean accuracy {name_b}: {self.mean_b.mean():.6f}",
            f"mean difference ({name_a} - {name_b}): {self.mean_diff:+.6f}",
            f"win/draw/loss ({name_a} vs {name_b}): {self.wins}/{self.draws}/{self.losses}",
            f"wilcoxon signed-rank: W+ = {w.statistic:g}, n = {w.n}, p = {w.p_value:.6g} ({w.method})",
        ]
        return "\n".join(lines)


def _per_dataset(rows, label):
    keyed = {}
    for row in rows:
        key = (row.dataset, row.resample)
        if key in keyed:
            raise DataError(f"{label}: duplicate entry for dataset {row.dataset!r} resample {row.resample}")
        keyed[key] = row.accuracy
    return keyed


def compare_results(rows_a, rows_b) -> Comparison:
    """Compare two result sets keyed by (dataset, resample); accuracies are averaged per dataset first."""
    a = _per_dataset(rows_a, "A")
    b = _per_dataset(rows_b, "B")
    only_a = sorted(set(a) - set(b))
    only_b = sorted(set(b) - set(a))
    if only_a or only_b:
        parts = []
        if only_a:
            parts.append("missing from B: " + ", ".join(f"{d}#{r}" for d, r in only_a))
        if only_b:
            parts.append("missing from A: " + ", ".join(f"{d}#{r}" for d, r in only_b))
        raise DataError("result keys differ; " + "; ".join(parts))
    if not a:
        raise DataError("no results to compare")

    acc_a, acc_b = defaultdict(list), defaultdict(list)
    for key in sorted(a):
        acc_a[key[0]].append(a[key])
        acc_b[key[0]].append(b[key])
    names = tuple(sorted(acc_a))
    mean_a = np.array([np.mean(acc_a[d]) for d in names])
    mean_b = np.array([np.mean(acc_b[d]) for d in names])
    diff = mean_a - mean_b
    diff[np.abs(diff) <= DRAW_TOLERANCE] = 0.0
    return Comparison(
        datasets=names,
        mean_a=mean_a,
        mean_b=mean_b,
        mean_diff=float(np.mean(diff)),
        wins=int(np.sum(diff > 0)),
        draws=int(np.sum(diff == 0)),
        losses=int(np.sum(diff < 0)),
        wilcoxon=wilcoxon_signed_rank(diff),
    )
