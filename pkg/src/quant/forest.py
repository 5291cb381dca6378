"""Extremely randomized trees.

Every tree sees the full training set (no bootstrap). At each node a fixed
number of candidate features is drawn without replacement; each candidate
gets one threshold drawn uniformly between its node-local min and max, and
the candidate with the lowest weighted Gini impurity wins. Candidates that
are constant within the node cannot split it; if every drawn candidate is
constant, further features are drawn until one is not, so a node only
becomes a leaf early when all of its examples have identical features.

Random numbers come from xoshiro256** with one independent stream per tree.
The stream for tree ``i`` is seeded with
``numpy.random.SeedSequence([master_seed, i]).generate_state(4, uint64)``,
so trees can be grown in any order, on any number of threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import ConfigError, DataError

_U64 = np.uint64


@numba.njit(inline="always")
def _rotl(x, k):
    return (x << _U64(k)) | (x >> _U64(64 - k))


@numba.njit(inline="always")
def _next_u64(s):
    result = _rotl(s[1] * _U64(5), 7) * _U64(9)
    t = s[1] << _U64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@numba.njit(inline="always")
def _uniform_open(s):
    # 53 random bits, offset by half a step: strictly inside (0, 1)
    return ((_next_u64(s) >> _U64(11)) + 0.5) * (1.0 / 9007199254740992.0)


@numba.njit(inline="always")
def _randbelow(s, bound):
    j = np.int64(((_next_u64(s) >> _U64(11)) * (1.0 / 9007199254740992.0)) * bound)
    return min(j, bound - 1)


@numba.njit(cache=True, nogil=True)
def _grow(XT, y, n_classes, n_candidates, min_split, max_depth, state):
    p, q = XT.shape
    cap = 2 * q - 1
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    counts = np.zeros((cap, n_classes), dtype=np.float64)

    samples = np.arange(q)
    features = np.arange(p)
    cl = np.zeros(n_classes, dtype=np.int64)
    ct = np.zeros(n_classes, dtype=np.int64)

    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    st_node[0], st_start[0], st_end[0], st_depth[0] = 0, 0, q, 0
    sp = 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        node, start, end, depth = st_node[sp], st_start[sp], st_end[sp], st_depth[sp]
        n = end - start

        ct[:] = 0
        for i in range(start, end):
            ct[y[samples[i]]] += 1
        present = 0
        for c in range(n_classes):
            counts[node, c] = ct[c]
            if ct[c] > 0:
                present += 1
        if present <= 1 or n < min_split or (max_depth >= 0 and depth >= max_depth):
            continue

        best_score = np.inf
        best_f = -1
        best_t = 0.0
        c = 0
        # draw n_candidates features; if all of them are constant here, keep drawing until one is not
        while c < p and (c < n_candidates or best_f < 0):
            j = c + _randbelow(state, p - c)
            features[c], features[j] = features[j], features[c]
            f = features[c]
            c += 1
            row = XT[f]
            lo = row[samples[start]]
            hi = lo
            for i in range(start + 1, end):
                v = row[samples[i]]
                if v < lo:
                    lo = v
                elif v > hi:
                    hi = v
            if not lo < hi:
                continue
            t = lo + _uniform_open(state) * (hi - lo)
            if t >= hi:
                t = lo + 0.5 * (hi - lo)
                if t >= hi:
                    t = lo
            cl[:] = 0
            for i in range(start, end):
                s_ = samples[i]
                if row[s_] <= t:
                    cl[y[s_]] += 1
            n_left = 0
            sq_left = 0.0
            sq_right = 0.0
            for k in range(n_classes):
                n_left += cl[k]
                sq_left += cl[k] * cl[k]
                r = ct[k] - cl[k]
                sq_right += r * r
            n_right = n - n_left
            # n_node * weighted Gini of the two children
            score = (n_left - sq_left / n_left) + (n_right - sq_right / n_right)
            if score < best_score or (
                score == best_score and (f < best_f or (f == best_f and t < best_t))
            ):
                best_score = score
                best_f = f
                best_t = t

        if best_f < 0:
            continue

        row = XT[best_f]
        i, j = start, end - 1
        while i <= j:
            if row[samples[i]] <= best_t:
                i += 1
            else:
                samples[i], samples[j] = samples[j], samples[i]
                j -= 1
        mid = i

        feature[node] = best_f
        threshold[node] = best_t
        left[node] = n_nodes
        right[node] = n_nodes + 1
        # push right first so the left subtree is numbered first (pre-order)
        st_node[sp], st_start[sp], st_end[sp], st_depth[sp] = n_nodes + 1, mid, end, depth + 1
        st_node[sp + 1], st_start[sp + 1], st_end[sp + 1], st_depth[sp + 1] = n_nodes, start, mid, depth + 1
        sp += 2
        n_nodes += 2

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        counts[:n_nodes].copy(),
    )


@numba.njit(cache=True, nogil=True)
def _accumulate(X, feature, threshold, left, right, dist, out):
    for i in range(X.shape[0]):
        node = 0
        while left[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        for c in range(dist.shape[1]):
            out[i, c] += dist[node, c]


@numba.njit(cache=True, nogil=True)
def _apply_leaves(X, feature, threshold, left, right):
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        node = 0
        while left[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


def gini(counts) -> float:
    """Gini impurity ``1 - sum((n_c / N) ** 2)`` of a class-count vector."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total < 1:
        raise DataError("gini needs a total count of at least 1")
    return float(1.0 - np.sum((counts / total) ** 2))


@dataclass(frozen=True)
class TrainConfig:
    num_trees: int = 200
    split_fraction: float | str = 0.1  # fraction of p, or "sqrt"
    min_samples_split: int = 2
    max_depth: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.num_trees < 1:
            raise ConfigError(f"num_trees must be >= 1, got {self.num_trees}")
        if isinstance(self.split_fraction, str):
            if self.split_fraction != "sqrt":
                raise ConfigError(f"split fraction must be 'sqrt' or a number in (0, 1], got {self.split_fraction!r}")
        elif not 0.0 < float(self.split_fraction) <= 1.0:
            raise ConfigError(f"split fraction must be in (0, 1], got {self.split_fraction}")
        if self.min_samples_split < 2:
            raise ConfigError(f"min_samples_split must be >= 2, got {self.min_samples_split}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError(f"max_depth must be >= 0, got {self.max_depth}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def candidates(self, p: int) -> int:
        """Candidate features examined per split for ``p`` features in total."""
        if self.split_fraction == "sqrt":
            k = math.isqrt(p)
        else:
            # round first so 0.1 * 160 does not become 17 through representation error
            k = math.ceil(round(float(self.split_fraction) * p, 9))
        return max(1, min(p, k))

    def to_dict(self) -> dict:
        return {
            "num_trees": self.num_trees,
            "split_fraction": self.split_fraction,
            "min_samples_split": self.min_samples_split,
            "max_depth": self.max_depth,
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> TrainConfig:
        return cls(**d)


def parse_split_fraction(text: str) -> float | str:
    text = text.strip().lower()
    if text == "sqrt":
        return "sqrt"
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"split fraction must be 'sqrt' or a decimal, got {text!r}") from None
    if not 0.0 < value <= 1.0:
        raise ConfigError(f"split fraction must be in (0, 1], got {text}")
    return value


def tree_state(seed: int, index: int) -> np.ndarray:
    state = np.random.SeedSequence([int(seed), int(index)]).generate_state(4, np.uint64)
    if not state.any():  # xoshiro's one forbidden state
        state[0] = 1
    return state


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat array tree; node 0 is the root and ``left == -1`` marks a leaf.

    Children are always allocated as a pair, so ``right == left + 1``.
    ``counts`` holds the training class counts reaching each node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def is_leaf(self) -> np.ndarray:
        return self.left < 0

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.left[node] >= 0:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def distributions(self) -> np.ndarray:
        totals = self.counts.sum(axis=1, keepdims=True)
        return np.divide(self.counts, totals, out=np.zeros_like(self.counts), where=totals > 0)

    def apply(self, X) -> np.ndarray:
        """Index of the leaf reached by each row of ``X``."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _apply_leaves(X, self.feature, self.threshold, self.left, self.right)

    def predict_proba(self, X) -> np.ndarray:
        return self.distributions()[self.apply(X)]


def _as_array(X) -> np.ndarray:
    return np.asarray(getattr(X, "data", X), dtype=np.float64)


def fit_tree(X, y, config: TrainConfig, index: int = 0, n_classes: int | None = None) -> Tree:
    """Grow the tree that would sit at position ``index`` of a forest trained with ``config``."""
    X = _as_array(X)
    y = np.asarray(y, dtype=np.int64)
    if n_classes is None:
        n_classes = int(y.max()) + 1
    return _fit_tree(np.ascontiguousarray(X.T), y, n_classes, config, index)


def _fit_tree(XT, y, n_classes, config, index) -> Tree:
    max_depth = -1 if config.max_depth is None else int(config.max_depth)
    arrays = _grow(
        XT,
        y,
        n_classes,
        config.candidates(XT.shape[0]),
        config.min_samples_split,
        max_depth,
        tree_state(config.seed, index),
    )
    return Tree(*arrays)


@dataclass(frozen=True, eq=False)
class Forest:
    trees: tuple
    n_classes: int
    n_features: int
    config: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))

    def _check(self, X) -> np.ndarray:
        X = np.ascontiguousarray(_as_array(X))
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} feature columns, got {X.shape[-1]}")
        return X

    def predict_proba(self, X, threads: int = 1) -> np.ndarray:
        """Average of the trees' normalised leaf class counts (soft voting)."""
        X = self._check(X)
        dists = [t.distributions() for t in self.trees]

        def run(rows):
            out = np.zeros((rows.shape[0], self.n_classes))
            for t, d in zip(self.trees, dists):
                _accumulate(rows, t.feature, t.threshold, t.left, t.right, d, out)
            return out / len(self.trees)

        threads = max(1, min(int(threads), X.shape[0]))
        if threads == 1:
            return run(X)
        chunks = np.array_split(X, threads)
        with ThreadPoolExecutor(threads) as pool:
            return np.concatenate(list(pool.map(run, chunks)), axis=0)

    def predict(self, X, threads: int = 1) -> np.ndarray:
        # argmax returns the first maximum, i.e. the lowest class id on ties
        return np.argmax(self.predict_proba(X, threads=threads), axis=1)


def fit(X, y, config: TrainConfig | None = None, n_classes: int | None = None, threads: int = 1) -> Forest:
    """Train a forest on feature matrix ``X`` (``q x p``) and class ids ``y``."""
    config = config or TrainConfig()
    X = _as_array(X)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("cannot fit a forest on zero training examples")
    if X.shape[1] == 0:
        raise DataError("cannot fit a forest on zero features")
    if y.shape != (X.shape[0],):
        raise DataError(f"got {X.shape[0]} examples but {y.size} labels")
    if y.min() < 0:
        raise DataError("class ids must be non-negative")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    elif y.max() >= n_classes:
        raise DataError(f"class id {int(y.max())} out of range for {n_classes} classes")

    XT = np.ascontiguousarray(X.T)
    grow = lambda i: _fit_tree(XT, y, n_classes, config, i)
    threads = max(1, min(int(threads), config.num_trees))
    if threads == 1:
        trees = [grow(i) for i in range(config.num_trees)]
    else:
        with ThreadPoolExecutor(threads) as pool:
            trees = list(pool.map(grow, range(config.num_trees)))
    return Forest(trees=tuple(trees), n_classes=n_classes, n_features=X.shape[1], config=config)
