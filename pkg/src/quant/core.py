"""Shared domain types: labelled datasets, feature matrices and column layout."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np


class QuantError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(QuantError, ValueError):
    pass


class DataError(QuantError, ValueError):
    pass


# column layout of a feature matrix; one record per feature
COLUMN_DTYPE = np.dtype(
    [
        ("representation", "<i4"),
        ("start", "<i4"),
        ("end", "<i4"),
        ("quantile", "<i4"),
        ("mean_subtracted", "u1"),
    ]
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def check_series(values, name="series") -> np.ndarray:
    """Validate a single univariate series and return it as float64."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1:
        raise DataError(f"{name} must be one-dimensional, got shape {x.shape}")
    if x.size < 1:
        raise DataError(f"{name} is empty")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise DataError(f"{name} contains a non-finite value at position {bad}")
    return x


def check_panel(X, name="X") -> np.ndarray:
    """Validate a stack of equal-length series (rows) and return float64 (q, n)."""
    try:
        X = np.asarray(X, dtype=np.float64)
    except ValueError as exc:  # ragged nested lists
        raise DataError(f"{name}: series must all have the same length") from exc
    if X.ndim != 2:
        raise DataError(f"{name} must be two-dimensional (examples x length), got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise DataError(f"{name} must contain at least one series of length >= 1")
    finite = np.isfinite(X)
    if not finite.all():
        row, col = (int(i) for i in np.argwhere(~finite)[0])
        raise DataError(f"{name}: series {row} contains a non-finite value at position {col}")
    return X


def relabel(raw_labels: Sequence[str]) -> tuple[np.ndarray, tuple[str, ...]]:
    """Map label strings to contiguous ids by lexicographic order of the distinct labels.

    >>> relabel(["b", "a", "b"])
    (array([1, 0, 1]), ('a', 'b'))
    """
    labels = [str(s) for s in raw_labels]
    if not labels:
        raise DataError("cannot relabel an empty label list")
    class_names = tuple(sorted(set(labels)))
    lookup = {name: i for i, name in enumerate(class_names)}
    ids = np.array([lookup[s] for s in labels], dtype=np.int64)
    return ids, class_names


def encode_labels(raw_labels: Sequence[str], class_names: Sequence[str]) -> np.ndarray:
    """Encode label strings against an existing class-name table."""
    lookup = {name: i for i, name in enumerate(class_names)}
    try:
        return np.array([lookup[str(s)] for s in raw_labels], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"unknown class label {exc.args[0]!r}") from None


@dataclass(frozen=True)
class LabeledDataset:
    """Equal-length univariate series with integer class ids.

    ``X`` has shape ``(q, n)``; ``y`` holds ids into ``class_names``.
    """

    X: np.ndarray
    y: np.ndarray
    class_names: tuple[str, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        X = check_panel(self.X)
        y = np.asarray(self.y, dtype=np.int64)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError(f"got {X.shape[0]} series but {y.size} labels")
        names = tuple(str(s) for s in self.class_names)
        if len(names) < 1:
            raise DataError("class_names must not be empty")
        if y.min() < 0 or y.max() >= len(names):
            raise DataError(f"class ids must lie in [0, {len(names)})")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "class_names", names)

    @classmethod
    def from_raw(cls, X, raw_labels, name=""):
        y, names = relabel(raw_labels)
        return cls(X, y, names, name)

    @property
    def n_examples(self) -> int:
        return self.X.shape[0]

    @property
    def length(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.n_classes)

    def check_all_classes_present(self):
        missing = [self.class_names[c] for c in np.flatnonzero(self.class_counts() == 0)]
        if missing:
            raise DataError(f"training data has no examples of class(es) {', '.join(missing)}")

    def subset(self, index) -> LabeledDataset:
        index = np.asarray(index, dtype=np.int64)
        return LabeledDataset(self.X[index], self.y[index], self.class_names, self.name)

    def labels(self) -> list[str]:
        return [self.class_names[i] for i in self.y]


def make_schema(records) -> np.ndarray:
    """Build a read-only column schema from ``(rep, start, end, quantile, mean_subtracted)`` tuples."""
    schema = np.array([tuple(r) for r in records], dtype=COLUMN_DTYPE)
    return _frozen(schema)


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """``q x p`` float64 features plus the per-column layout they were computed with."""

    data: np.ndarray
    schema: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise DataError(f"feature data must be 2-d, got shape {data.shape}")
        schema = np.asarray(self.schema)
        if schema.dtype != COLUMN_DTYPE:
            schema = schema.astype(COLUMN_DTYPE)
        if schema.shape != (data.shape[1],):
            raise DataError(f"schema has {schema.shape[0]} columns but data has {data.shape[1]}")
        if not np.all(np.isfinite(data)):
            raise DataError("feature matrix contains non-finite values")
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "schema", _frozen(schema))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_cols(self) -> int:
        return self.data.shape[1]
