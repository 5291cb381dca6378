import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quant import forest
from quant.core import ConfigError, DataError
from quant.forest import Forest, TrainConfig, Tree, fit_tree, gini


@pytest.mark.parametrize("counts, expected", [([5, 0], 0.0), ([1, 1], 0.5), ([2, 1, 1], 0.625)])
def test_gini(counts, expected):
    assert gini(counts) == pytest.approx(expected, abs=1e-15)


def test_gini_empty():
    with pytest.raises(DataError):
        gini([0, 0])


@pytest.mark.parametrize("p, frac, k", [(160, 0.1, 16), (1000, 0.1, 100), (5, 0.1, 1), (10, 1.0, 10),
                                        (100, "sqrt", 10), (99, "sqrt", 9), (1, "sqrt", 1)])
def test_candidates(p, frac, k):
    assert TrainConfig(split_fraction=frac).candidates(p) == k


@pytest.mark.parametrize("kwargs", [{"num_trees": 0}, {"split_fraction": 0.0}, {"split_fraction": 1.5},
                                    {"split_fraction": "log2"}, {"min_samples_split": 1}, {"seed": -1}])
def test_config_rejects(kwargs):
    with pytest.raises(ConfigError):
        TrainConfig(**kwargs)


def test_pure_labels_single_leaf():
    X = np.random.default_rng(0).normal(size=(10, 4))
    tree = fit_tree(X, np.zeros(10, int), TrainConfig())
    assert tree.n_nodes == 1
    assert tree.counts[0].tolist() == [10.0]


def test_forced_separation():
    X = np.array([[0.0], [1.0]])
    tree = fit_tree(X, [0, 1], TrainConfig())
    assert tree.n_nodes == 3
    assert 0.0 < tree.threshold[0] < 1.0
    leaves = tree.counts[tree.is_leaf]
    assert sorted(map(tuple, leaves)) == [(0.0, 1.0), (1.0, 0.0)]


def test_xor_needs_depth_two():
    X = np.array([[0.0, 0], [1, 1], [0, 1], [1, 0]])
    y = np.array([0, 0, 1, 1])
    for seed in range(5):
        tree = fit_tree(X, y, TrainConfig(split_fraction=1.0, seed=seed))
        assert tree.depth() >= 2
        assert np.array_equal(tree.predict_proba(X).argmax(axis=1), y)


def _consistent_data(seed, q=60, p=12, classes=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(q, p))
    y = rng.integers(0, classes, size=q)
    return X, y


def test_separable_gaussians():
    rng = np.random.default_rng(1)
    X = np.r_[rng.normal(-3, 1, (50, 20)), rng.normal(3, 1, (50, 20))]
    y = np.repeat([0, 1], 50)
    f = forest.fit(X, y)
    assert np.array_equal(f.predict(X), y)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 40), st.integers(1, 8), st.integers(2, 4))
def test_training_accuracy_is_perfect(seed, q, p, classes):
    # random continuous features: no duplicated rows, hence consistent
    X, y = _consistent_data(seed, q, p, classes)
    f = forest.fit(X, y, TrainConfig(num_trees=5, seed=seed), n_classes=classes)
    assert np.array_equal(f.predict(X), y)


def test_training_accuracy_with_duplicate_feature_values():
    rng = np.random.default_rng(7)
    X = rng.integers(0, 3, size=(80, 6)).astype(float)
    X = np.unique(X, axis=0)
    y = rng.integers(0, 2, size=X.shape[0])
    f = forest.fit(X, y, TrainConfig(num_trees=10))
    assert np.array_equal(f.predict(X), y)


def test_single_tree_forest_equals_fit_tree():
    X, y = _consistent_data(2)
    f = forest.fit(X, y, TrainConfig(num_trees=1, seed=9))
    t = fit_tree(X, y, TrainConfig(num_trees=1, seed=9), index=0)
    for name in ("feature", "threshold", "left", "right", "counts"):
        assert np.array_equal(getattr(f.trees[0], name), getattr(t, name))


def _same_forest(a, b):
    assert len(a.trees) == len(b.trees)
    for s, t in zip(a.trees, b.trees):
        for name in ("feature", "threshold", "left", "right", "counts"):
            assert np.array_equal(getattr(s, name), getattr(t, name))


def test_thread_count_does_not_change_forest():
    X, y = _consistent_data(3, q=120, p=40)
    cfg = TrainConfig(num_trees=24, seed=123)
    f1 = forest.fit(X, y, cfg, threads=1)
    f8 = forest.fit(X, y, cfg, threads=8)
    _same_forest(f1, f8)
    assert np.array_equal(f1.predict_proba(X, threads=1), f8.predict_proba(X, threads=8))


def test_seed_changes_forest():
    X, y = _consistent_data(4)
    a = forest.fit(X, y, TrainConfig(num_trees=3, seed=1))
    b = forest.fit(X, y, TrainConfig(num_trees=3, seed=2))
    assert any(
        s.n_nodes != t.n_nodes or not np.array_equal(s.threshold, t.threshold) for s, t in zip(a.trees, b.trees)
    )


def test_thresholds_lie_between_node_min_and_max():
    X, y = _consistent_data(5, q=200, p=30)
    f = forest.fit(X, y, TrainConfig(num_trees=5))
    for tree in f.trees:
        members = {0: np.arange(X.shape[0])}
        for node in range(tree.n_nodes):
            rows = members[node]
            if tree.left[node] < 0:
                continue
            col = X[rows, tree.feature[node]]
            assert col.min() < tree.threshold[node] < col.max()
            go_left = col <= tree.threshold[node]
            members[tree.left[node]] = rows[go_left]
            members[tree.right[node]] = rows[~go_left]
            assert tree.right[node] == tree.left[node] + 1
        # leaf counts reproduce the training class counts reaching them
        for node in np.flatnonzero(tree.is_leaf):
            assert np.array_equal(tree.counts[node], np.bincount(y[members[node]], minlength=3))


def test_class_permutation_permutes_leaves():
    X, y = _consistent_data(6, q=90, p=15, classes=3)
    perm = np.array([2, 0, 1])
    cfg = TrainConfig(num_trees=7, seed=5)
    a = forest.fit(X, y, cfg, n_classes=3)
    b = forest.fit(X, perm[y], cfg, n_classes=3)
    for s, t in zip(a.trees, b.trees):
        assert np.array_equal(s.feature, t.feature)
        assert np.array_equal(s.threshold, t.threshold)
        assert np.array_equal(s.counts[:, :], t.counts[:, perm])
    Z = np.random.default_rng(0).normal(size=(50, 15))
    pa, pb = a.predict_proba(Z), b.predict_proba(Z)
    assert np.array_equal(pa, pb[:, perm])
    unique_max = (np.sort(pa, axis=1)[:, -1] > np.sort(pa, axis=1)[:, -2])
    assert np.array_equal(perm[a.predict(Z)][unique_max], b.predict(Z)[unique_max])


def test_proba_rows_sum_to_one():
    X, y = _consistent_data(7)
    f = forest.fit(X, y, TrainConfig(num_trees=15))
    Z = np.random.default_rng(1).normal(size=(100, X.shape[1])) * 3
    assert np.allclose(f.predict_proba(Z).sum(axis=1), 1.0, atol=1e-9)


def test_single_class_forest():
    X = np.random.default_rng(0).normal(size=(5, 3))
    f = forest.fit(X, np.zeros(5, int), TrainConfig(num_trees=3))
    assert np.array_equal(f.predict_proba(X), np.ones((5, 1)))


def _stump(feature, threshold, left_counts, right_counts):
    return Tree(
        feature=np.array([feature, -1, -1], dtype=np.int32),
        threshold=np.array([threshold, 0.0, 0.0]),
        left=np.array([1, -1, -1], dtype=np.int32),
        right=np.array([2, -1, -1], dtype=np.int32),
        counts=np.array([[0, 0], left_counts, right_counts], dtype=np.float64),
    )


def test_soft_vote_is_average_of_tree_distributions():
    t1 = _stump(0, 0.0, [3, 1], [0, 2])
    t2 = _stump(0, 0.5, [1, 1], [4, 1])
    f = Forest((t1, t2), n_classes=2, n_features=1)
    X = np.array([[-1.0], [0.25], [2.0]])
    expected = (t1.predict_proba(X) + t2.predict_proba(X)) / 2
    assert np.allclose(f.predict_proba(X), expected, atol=1e-15)
    assert np.allclose(f.predict_proba(X)[0], [0.625, 0.375])


def test_predict_argmax_and_tie_rule():
    f = Forest((_stump(0, 0.0, [2, 8], [5, 5]),), n_classes=2, n_features=1)
    assert f.predict(np.array([[-1.0], [1.0]])).tolist() == [1, 0]


def test_errors():
    with pytest.raises(DataError):
        forest.fit(np.zeros((0, 3)), np.zeros(0, int))
    with pytest.raises(DataError):
        forest.fit(np.zeros((3, 0)), np.zeros(3, int))
    f = forest.fit(np.eye(3), [0, 1, 2], TrainConfig(num_trees=2))
    with pytest.raises(DataError, match="3 feature columns"):
        f.predict_proba(np.zeros((2, 4)))


def test_max_depth_limits_tree():
    X, y = _consistent_data(8, q=150, p=10)
    f = forest.fit(X, y, TrainConfig(num_trees=4, max_depth=2))
    assert all(t.depth() <= 2 for t in f.trees)
    stump = forest.fit(X, y, TrainConfig(num_trees=1, max_depth=0))
    assert stump.trees[0].n_nodes == 1


def test_min_samples_split():
    X, y = _consistent_data(9, q=100, p=10)
    t = fit_tree(X, y, TrainConfig(min_samples_split=30))
    internal = ~t.is_leaf
    assert np.all(t.counts[internal].sum(axis=1) >= 30)
