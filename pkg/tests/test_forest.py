"""Tree growth, forest aggregation, and probability prediction."""

import numpy as np
import pytest
from scipy.special import expit

from divlate.errors import ConfigError, DataValidationError
from divlate.forest import (
    ForestConfig,
    ForestModel,
    Tree,
    forest_fit,
    forest_predict_proba,
    forest_predict_raw,
    tree_fit,
)
from divlate import kernels


def _leaf_tree(value, count=1):
    z = np.zeros(1, dtype=np.int64)
    return Tree(
        feature=np.full(1, -1, dtype=np.int64),
        threshold=np.zeros(1),
        left=z.copy(),
        right=z.copy(),
        value=np.array([value]),
        count=np.array([count], dtype=np.int64),
    )


def _stump(feat, thr, lo_val, hi_val):
    return Tree(
        feature=np.array([feat, -1, -1], dtype=np.int64),
        threshold=np.array([thr, 0.0, 0.0]),
        left=np.array([1, 0, 0], dtype=np.int64),
        right=np.array([2, 0, 0], dtype=np.int64),
        value=np.array([0.0, lo_val, hi_val]),
        count=np.array([2, 1, 1], dtype=np.int64),
    )


class TestTreeGrowth:
    def test_pure_targets_make_a_single_leaf(self):
        X = np.random.default_rng(0).normal(size=(30, 2))
        rng = np.random.default_rng(1)
        tree = tree_fit(X, np.ones(30), ForestConfig(n_trees=1), rng)
        assert tree.n_nodes == 1
        assert tree.n_leaves == 1
        assert tree.feature[0] == -1
        assert tree.value[0] == 1.0

    def test_separable_one_split(self):
        # one feature cleanly splits the classes: depth-1 tree is exact
        X = np.arange(20, dtype=np.float64).reshape(-1, 1)
        y = (X[:, 0] >= 10).astype(np.float64)
        arrays = kernels.grow_tree(X, y, 1, 1, 1, 42)
        tree = Tree(*arrays)
        assert tree.n_nodes == 3
        assert tree.threshold[0] == 9.5
        pred = kernels.tree_apply(
            tree.feature, tree.threshold, tree.left, tree.right, tree.value, X
        )
        assert np.array_equal(pred, y)

    def test_leaf_values_are_class_fractions(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0.0, 1.0, 1.0, 1.0])
        arrays = kernels.grow_tree(X, y, 1, 2, 1, 7)
        tree = Tree(*arrays)
        # only legal split with min_leaf=2 is the midpoint: fractions 1/2 and 1
        assert tree.n_nodes == 3
        assert tree.threshold[0] == 1.5
        got = kernels.tree_apply(
            tree.feature, tree.threshold, tree.left, tree.right, tree.value, X
        )
        assert np.array_equal(got, [0.5, 0.5, 1.0, 1.0])
        assert np.array_equal(np.sort(tree.count[1:]), [2, 2])

    def test_min_leaf_blocks_splits(self):
        X = np.arange(6, dtype=np.float64).reshape(-1, 1)
        y = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
        arrays = kernels.grow_tree(X, y, 5, 6, 1, 3)
        assert Tree(*arrays).n_nodes == 1

    def test_xor_needs_depth_two(self):
        rng = np.random.default_rng(10)
        X = rng.integers(0, 2, size=(400, 2)).astype(np.float64)
        y = (X[:, 0] != X[:, 1]).astype(np.float64)
        Xj = X + rng.normal(0.0, 0.01, size=X.shape)
        arrays = kernels.grow_tree(Xj, y, 4, 1, 2, 5)
        tree = Tree(*arrays)
        pred = kernels.tree_apply(
            tree.feature, tree.threshold, tree.left, tree.right, tree.value, Xj
        )
        assert np.mean((pred > 0.5) == (y > 0.5)) >= 0.95


class TestForest:
    def test_xor_accuracy(self):
        rng = np.random.default_rng(10)
        X = rng.integers(0, 2, size=(400, 2)).astype(np.float64) + rng.normal(
            0.0, 0.01, size=(400, 2)
        )
        y = ((X[:, 0] > 0.5) != (X[:, 1] > 0.5)).astype(np.float64)
        model = forest_fit(X, y, ForestConfig(n_trees=30, mtry=2, seed=4))
        p = forest_predict_proba(model, X)
        assert np.mean((p > 0.5) == (y > 0.5)) >= 0.95

    def test_constant_feature_never_used(self):
        rng = np.random.default_rng(6)
        X = np.column_stack([rng.normal(size=200), np.full(200, 5.0)])
        y = (X[:, 0] > 0).astype(np.float64)
        model = forest_fit(X, y, ForestConfig(n_trees=10, mtry=2, seed=2))
        for tree in model.trees:
            used = tree.feature[tree.feature >= 0]
            assert not np.isin(1, used)

    def test_sigmoid_regression_accuracy(self):
        rng = np.random.default_rng(200)
        X = rng.normal(size=(1500, 3))
        prob = expit(1.5 * X[:, 0] - X[:, 1])
        y = (rng.random(1500) < prob).astype(np.float64)
        model = forest_fit(X, y, ForestConfig(max_depth=8, min_leaf=20, seed=0))
        p = forest_predict_proba(model, X)
        mae = float(np.mean(np.abs(p - prob)))
        assert mae <= 0.08

    def test_hand_built_two_tree_average(self):
        model = ForestModel(
            trees=(_leaf_tree(0.2), _leaf_tree(0.6)),
            n_features=1,
            config=ForestConfig(n_trees=2),
        )
        got = forest_predict_raw(model, np.array([[0.0], [9.9]]))
        assert np.array_equal(got, [0.4, 0.4])

    def test_hand_built_stump_routing(self):
        # left branch takes x <= threshold
        model = ForestModel(
            trees=(_stump(0, 1.0, 0.25, 0.75),),
            n_features=2,
            config=ForestConfig(n_trees=1),
        )
        X = np.array([[1.0, 9.0], [1.0000001, -9.0], [-5.0, 0.0]])
        assert np.array_equal(forest_predict_raw(model, X), [0.25, 0.75, 0.25])

    def test_all_zero_targets(self):
        X = np.random.default_rng(3).normal(size=(50, 2))
        model = forest_fit(X, np.zeros(50), ForestConfig(n_trees=5, seed=1))
        assert np.array_equal(forest_predict_raw(model, X), np.zeros(50))
        assert np.array_equal(forest_predict_proba(model, X), np.full(50, 0.001))

    def test_proba_is_clipped(self):
        X = np.random.default_rng(3).normal(size=(50, 2))
        model = forest_fit(X, np.ones(50), ForestConfig(n_trees=5, seed=1))
        assert np.array_equal(forest_predict_proba(model, X), np.full(50, 0.999))


class TestDeterminism:
    def test_same_seed_same_model(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(120, 3))
        y = (rng.random(120) < 0.5).astype(np.float64)
        a = forest_fit(X, y, ForestConfig(n_trees=8, seed=5))
        b = forest_fit(X, y, ForestConfig(n_trees=8, seed=5))
        c = forest_fit(X, y, ForestConfig(n_trees=8, seed=6))
        Xq = rng.normal(size=(40, 3))
        assert np.array_equal(forest_predict_raw(a, Xq), forest_predict_raw(b, Xq))
        assert not np.array_equal(forest_predict_raw(a, Xq), forest_predict_raw(c, Xq))

    def test_tree_t_depends_only_on_seed_and_index(self):
        # growing fewer trees reproduces the prefix of a larger forest
        rng = np.random.default_rng(9)
        X = rng.normal(size=(80, 2))
        y = (rng.random(80) < 0.5).astype(np.float64)
        small = forest_fit(X, y, ForestConfig(n_trees=3, seed=11))
        big = forest_fit(X, y, ForestConfig(n_trees=6, seed=11))
        for ta, tb in zip(small.trees, big.trees):
            assert np.array_equal(ta.feature, tb.feature)
            assert np.array_equal(ta.threshold, tb.threshold)
            assert np.array_equal(ta.value, tb.value)


class TestValidation:
    def test_config_rejects_bad_values(self):
        with pytest.raises(ConfigError):
            ForestConfig(n_trees=0)
        with pytest.raises(ConfigError):
            ForestConfig(max_depth=0)
        with pytest.raises(ConfigError):
            ForestConfig(min_leaf=0)
        with pytest.raises(ConfigError):
            ForestConfig(mtry=0)

    def test_mtry_cannot_exceed_features(self):
        X = np.zeros((10, 2))
        y = np.zeros(10)
        with pytest.raises(ConfigError, match="mtry=3 exceeds"):
            forest_fit(X, y, ForestConfig(mtry=3))

    def test_fit_rejects_bad_inputs(self):
        with pytest.raises(DataValidationError, match="binary"):
            forest_fit(np.zeros((4, 1)), np.array([0.0, 1.0, 2.0, 0.0]), ForestConfig())
        with pytest.raises(DataValidationError, match="do not align"):
            forest_fit(np.zeros((4, 1)), np.zeros(3), ForestConfig())
        with pytest.raises(DataValidationError, match="empty"):
            forest_fit(np.zeros((0, 1)), np.zeros(0), ForestConfig())

    def test_predict_rejects_wrong_width(self):
        X = np.random.default_rng(0).normal(size=(20, 2))
        model = forest_fit(X, np.zeros(20), ForestConfig(n_trees=2))
        with pytest.raises(DataValidationError, match="expected"):
            forest_predict_raw(model, np.zeros((5, 3)))
