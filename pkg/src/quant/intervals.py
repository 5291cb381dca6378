"""Fixed dyadic intervals.

At depth level ``j`` (1-based) a series of length ``n`` is cut into ``2**(j-1)``
contiguous pieces. Every level after the first also gets a second set of
pieces translated by half a piece length. Intervals are half-open ``[start, end)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import ConfigError

log = logging.getLogger(__name__)

BASE, SHIFTED = 0, 1


def default_depth(n: int) -> int:
    if n < 1:
        raise ConfigError(f"series length must be >= 1, got {n}")
    # n.bit_length() == floor(log2 n) + 1, without floating point
    return min(6, n.bit_length())


def max_depth(n: int) -> int:
    """Deepest level whose piece count ``2**(d-1)`` still fits in ``n`` values."""
    return n.bit_length()


def interval_count(d: int) -> int:
    """Number of intervals at depth ``d`` when ``n`` divides evenly."""
    return 2 ** (d - 1) * 4 - 2 - d


@dataclass(frozen=True)
class IntervalPlan:
    n: int
    depth: int
    # (len, 4) int array: start, end, level (1-based), group (BASE/SHIFTED)
    table: np.ndarray

    def __len__(self):
        return self.table.shape[0]

    def __iter__(self):
        for start, end, _, _ in self.table:
            yield int(start), int(end)

    @property
    def starts(self) -> np.ndarray:
        return self.table[:, 0]

    @property
    def ends(self) -> np.ndarray:
        return self.table[:, 1]

    @property
    def lengths(self) -> np.ndarray:
        return self.table[:, 1] - self.table[:, 0]

    def group(self, level: int, group: int) -> np.ndarray:
        mask = (self.table[:, 2] == level) & (self.table[:, 3] == group)
        return self.table[mask, :2]


def make_intervals(n: int, d: int, warn: bool = True) -> IntervalPlan:
    """Build the interval plan for series length ``n`` and depth ``d``.

    Depth is clamped to ``floor(log2 n) + 1`` when ``2**(d-1) > n``.
    """
    if n < 1:
        raise ConfigError(f"series length must be >= 1, got {n}")
    if d < 1:
        raise ConfigError(f"depth must be >= 1, got {d}")
    if d > max_depth(n):
        (log.warning if warn else log.debug)("depth %d is too deep for length %d; clamped to %d", d, n, max_depth(n))
        d = max_depth(n)

    rows = []
    for level in range(1, d + 1):
        pieces = 2 ** (level - 1)
        # pieces is a power of two, so i * n / pieces is exact; rint rounds half to even
        bounds = np.rint(np.arange(pieces + 1) * n / pieces).astype(np.int64)
        starts, ends = bounds[:-1], bounds[1:]
        keep = ends > starts
        rows.extend((a, b, level, BASE) for a, b in zip(starts[keep], ends[keep]))
        if level == 1:
            continue
        shift = int(round(n / pieces)) // 2
        # the last piece always runs past n once shifted, so the shifted set has pieces - 1 members
        s_starts, s_ends = starts[:-1] + shift, ends[:-1] + shift
        keep = (s_ends <= n) & (s_ends > s_starts)
        rows.extend((a, b, level, SHIFTED) for a, b in zip(s_starts[keep], s_ends[keep]))

    table = np.array(rows, dtype=np.int64).reshape(-1, 4)
    table.flags.writeable = False
    return IntervalPlan(n=n, depth=d, table=table)
