"""Quantile features over dyadic intervals of each input representation."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    COLUMN_DTYPE,
    ConfigError,
    DataError,
    FeatureMatrix,
    check_panel,
    make_schema,
)
from .intervals import IntervalPlan, default_depth, make_intervals
from .representations import (
    ALL_REPRESENTATIONS,
    Representation,
    active_representations,
    build_representations,
    representation_length,
)

log = logging.getLogger(__name__)

MEAN_MODES = ("alternate", "none", "all")


@dataclass(frozen=True)
class TransformConfig:
    depth: int | None = None  # None -> min(6, floor(log2 n) + 1)
    divisor: int = 4
    window: int = 5
    representations: tuple[Representation, ...] = ALL_REPRESENTATIONS
    mean_subtraction: str = "alternate"

    def __post_init__(self):
        if self.depth is not None and self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if self.divisor < 1:
            raise ConfigError(f"divisor must be >= 1, got {self.divisor}")
        if self.window < 1 or self.window % 2 == 0:
            raise ConfigError(f"smoothing window must be an odd integer >= 1, got {self.window}")
        reps = tuple(sorted({Representation(r) for r in self.representations}))
        if not reps:
            raise ConfigError("at least one representation is required")
        object.__setattr__(self, "representations", reps)
        if self.mean_subtraction not in MEAN_MODES:
            raise ConfigError(f"mean_subtraction must be one of {MEAN_MODES}, got {self.mean_subtraction!r}")

    @classmethod
    def fast(cls, **overrides) -> TransformConfig:
        """Reduced preset: one fewer depth level and half the quantiles per interval."""
        return replace(cls(depth=5, divisor=8), **overrides)

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "divisor": self.divisor,
            "window": self.window,
            "representations": [r.flag for r in self.representations],
            "mean_subtraction": self.mean_subtraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> TransformConfig:
        return cls(
            depth=d["depth"],
            divisor=d["divisor"],
            window=d["window"],
            representations=tuple(Representation.parse(r) for r in d["representations"]),
            mean_subtraction=d["mean_subtraction"],
        )


def quantile_count(m: int, v: int) -> int:
    """Quantiles taken from an interval of length ``m``: ``1 + (m - 1) // v``."""
    return 1 + (m - 1) // v


def _subtract_mask(k: int, m: int, mode: str) -> np.ndarray:
    mask = np.zeros(k, dtype=bool)
    if m >= 2 and k > 1:
        if mode == "alternate":
            mask[1::2] = True
        elif mode == "all":
            mask[:] = True
    return mask


def _quantiles(values: np.ndarray, k: int, subtract: np.ndarray) -> np.ndarray:
    """Row-wise quantiles of a ``(rows, m)`` block; see :func:`interval_quantiles`."""
    m = values.shape[1]
    s = np.sort(values, axis=1)
    if m == 1:
        return s.copy()
    if k == 1:
        num, den = np.array([m - 1]), 2
    else:
        num, den = np.arange(k) * (m - 1), k - 1
    # positions num / den in exact integer arithmetic so that v = 1 hits the order statistics exactly
    lo = num // den
    hi = np.minimum(lo + 1, m - 1)
    frac = (num % den) / den
    a, b = s[:, lo], s[:, hi]
    q = np.clip(a + frac * (b - a), a, b)
    if subtract.any():
        # mean of the sorted values, so the result cannot depend on input order
        q[:, subtract] -= s.mean(axis=1, keepdims=True)
    return q


def interval_quantiles(values, v: int = 4, mean_subtraction: str = "alternate") -> np.ndarray:
    """Quantile features of one interval.

    ``k = 1 + (m - 1) // v`` quantiles at evenly spaced levels ``i / (k - 1)``,
    linearly interpolated between order statistics (a single quantile is the
    median). With the default ``"alternate"`` mode the interval mean is
    subtracted from the quantiles at odd positions.

    >>> interval_quantiles([1.0, 2.0, 3.0, 4.0], v=1)
    array([ 1. , -0.5,  3. ,  1.5])
    """
    if mean_subtraction not in MEAN_MODES:
        raise ConfigError(f"mean_subtraction must be one of {MEAN_MODES}")
    if v < 1:
        raise ConfigError(f"divisor must be >= 1, got {v}")
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size < 1:
        raise DataError("interval values must be a non-empty 1-d sequence")
    m = values.size
    k = quantile_count(m, v)
    return _quantiles(values[None, :], k, _subtract_mask(k, m, mean_subtraction))[0]


@dataclass(frozen=True, eq=False)
class FittedTransform:
    config: TransformConfig
    n: int
    plans: dict = field(repr=False)  # Representation -> IntervalPlan
    schema: np.ndarray = field(repr=False)

    @property
    def n_features(self) -> int:
        return self.schema.shape[0]

    @property
    def representations(self) -> tuple[Representation, ...]:
        return tuple(self.plans)

    def transform(self, X, threads: int = 1) -> FeatureMatrix:
        return apply(self, X, threads=threads)


def fit(data, config: TransformConfig | None = None) -> FittedTransform:
    """Lay out the feature columns for series of the length found in ``data``.

    ``data`` may be a :class:`~quant.core.LabeledDataset`, a ``(q, n)`` array,
    or simply the series length. Labels are never read.
    """
    config = config or TransformConfig()
    if isinstance(data, (int, np.integer)):
        n = int(data)
    else:
        X = getattr(data, "X", data)
        n = int(np.shape(X)[-1])
    if n < 1:
        raise DataError("series length must be >= 1")
    depth = config.depth if config.depth is not None else default_depth(n)

    plans: dict[Representation, IntervalPlan] = {}
    records = []
    for rep in active_representations(n, config.representations):
        plan = make_intervals(representation_length(rep, n), depth, warn=config.depth is not None)
        plans[rep] = plan
        for start, end in plan:
            m = end - start
            k = quantile_count(m, config.divisor)
            mask = _subtract_mask(k, m, config.mean_subtraction)
            records.extend((int(rep), start, end, i, int(mask[i])) for i in range(k))
    return FittedTransform(config=config, n=n, plans=plans, schema=make_schema(records))


def _apply_rows(t: FittedTransform, X: np.ndarray) -> np.ndarray:
    out = np.empty((X.shape[0], t.n_features), dtype=np.float64)
    reps = build_representations(X, t.representations, t.config.window)
    col = 0
    for rep, plan in t.plans.items():
        R = reps[rep]
        for start, end in plan:
            m = end - start
            k = quantile_count(m, t.config.divisor)
            mask = _subtract_mask(k, m, t.config.mean_subtraction)
            out[:, col : col + k] = _quantiles(R[:, start:end], k, mask)
            col += k
    return out


def apply(t: FittedTransform, X, threads: int = 1) -> FeatureMatrix:
    """Compute the feature matrix for every series (row) of ``X``.

    Rows are processed independently, so the result does not depend on ``threads``.
    """
    X = getattr(X, "X", X)
    if not isinstance(X, np.ndarray):
        for i, series in enumerate(X):
            if len(series) != t.n:
                raise DataError(f"series {i} has length {len(series)} but the transform was fitted for length {t.n}")
    X = check_panel(X)
    if X.shape[1] != t.n:
        raise DataError(f"series 0 has length {X.shape[1]} but the transform was fitted for length {t.n}")
    q = X.shape[0]
    threads = max(1, min(int(threads), q))
    if threads == 1:
        data = _apply_rows(t, X)
    else:
        chunks = np.array_split(np.arange(q), threads)
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda idx: _apply_rows(t, X[idx]), chunks))
        data = np.concatenate(parts, axis=0)
    return FeatureMatrix(data, t.schema)


def schema_equal(a: np.ndarray, b: np.ndarray) -> bool:
    return a.dtype == COLUMN_DTYPE and b.dtype == COLUMN_DTYPE and a.tobytes() == b.tobytes()
