"""Random forest probability estimator built on the CART kernels."""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .common import clip_probs
from .errors import ConfigError, DataValidationError


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 12
    min_leaf: int = 5
    mtry: int | None = None  # None: ceil(sqrt(d)) at fit time
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_leaf < 1:
            raise ConfigError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.mtry is not None and self.mtry < 1:
            raise ConfigError(f"mtry must be >= 1, got {self.mtry}")


@dataclass(frozen=True)
class Tree:
    """Flat-array binary tree; feature == -1 marks a leaf. `value` holds the
    training class-1 fraction of the node, `count` its row count."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    n_features: int
    config: ForestConfig


def _resolve_mtry(config: ForestConfig, d: int) -> int:
    mtry = config.mtry if config.mtry is not None else math.ceil(math.sqrt(d))
    if mtry > d:
        raise ConfigError(f"mtry={mtry} exceeds feature count {d}")
    return mtry


def _check_xy(features, targets):
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(targets, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataValidationError(f"features {X.shape} and targets {y.shape} do not align")
    if X.shape[0] == 0:
        raise DataValidationError("cannot fit on an empty sample")
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataValidationError("targets must be binary 0/1")
    return X, y


def tree_fit(features, targets, config: ForestConfig, rng: np.random.Generator) -> Tree:
    """Grow one tree on an n-sample bootstrap draw from `rng`.

    The draw order is fixed: bootstrap indices first, then the per-node
    feature-sampling seed, so a tree depends only on its stream.
    """
    X, y = _check_xy(features, targets)
    n = X.shape[0]
    mtry = _resolve_mtry(config, X.shape[1])
    boot = rng.integers(0, n, size=n)
    node_seed = int(rng.integers(0, 2**63, dtype=np.int64))
    arrays = kernels.grow_tree(
        X[boot], y[boot], config.max_depth, config.min_leaf, mtry, node_seed
    )
    return Tree(*arrays)


def forest_fit(features, targets, config: ForestConfig, seed: int | None = None) -> ForestModel:
    """Fit n_trees trees on independent seed-derived streams.

    Tree t depends only on (seed, t), so construction order is irrelevant to
    the ensemble.
    """
    X, y = _check_xy(features, targets)
    if seed is None:
        seed = config.seed
    _resolve_mtry(config, X.shape[1])
    trees = []
    for t in range(config.n_trees):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, t])))
        trees.append(tree_fit(X, y, config, rng))
    return ForestModel(trees=tuple(trees), n_features=X.shape[1], config=config)


def forest_predict_raw(model: ForestModel, features) -> np.ndarray:
    """Unclipped mean of per-tree leaf fractions."""
    X = np.ascontiguousarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataValidationError(
            f"expected (n, {model.n_features}) features, got {X.shape}"
        )
    acc = np.zeros(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        acc += kernels.tree_apply(
            tree.feature, tree.threshold, tree.left, tree.right, tree.value, X
        )
    return acc / len(model.trees)


def forest_predict_proba(model: ForestModel, features) -> np.ndarray:
    """Class-1 probabilities: clipped ensemble average."""
    return clip_probs(forest_predict_raw(model, features))
