"""
Regression Random Forest with out-of-bag bookkeeping.

Each tree is a CART regression tree grown by scikit-learn on a
with-replacement bootstrap of the n training rows. At every node `mtry`
candidate features are drawn at random and the split maximizing the decrease
in node sum of squares is taken. A node is split only while it holds more
than `min_node_size` in-bag rows; leaves predict the in-bag mean.

The bootstrap is drawn here rather than inside scikit-learn, and the in-bag
multiset of every tree is kept as a row-count vector. That is what
out-of-bag prediction needs: row i is predicted by exactly the trees whose
count for i is zero.
"""
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from sklearn.tree import DecisionTreeRegressor

from ..core import Dataset, PredictionVector, Provenance, require_trainable
from ..exceptions import ContractViolation
from ..log import kv
from ..parallel import map_ordered
from ..schemas import BaseKind, BaseRegressorSpec
from ..utils import rng_for, subset_key

logger = logging.getLogger(__name__)

_LEAF = -1


# ==========================================
# SINGLE TREE
# ==========================================

@dataclass(frozen=True)
class RegressionTree:
    """
    Flat array representation of a binary regression tree.

    `feature[k] == -1` marks node k as a leaf. Rows with
    `x[feature[k]] <= threshold[k]` go to `left[k]`, the others to `right[k]`.
    Feature numbers index the columns of the matrix the tree was grown on.
    Inputs are compared in single precision, as scikit-learn does when growing.
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @classmethod
    def from_estimator(cls, estimator: DecisionTreeRegressor) -> "RegressionTree":
        tree = estimator.tree_
        is_leaf = tree.children_left == _LEAF
        return cls(
            np.where(is_leaf, _LEAF, tree.feature).astype(np.intp),
            np.where(is_leaf, 0.0, tree.threshold).astype(float),
            tree.children_left.astype(np.intp),
            tree.children_right.astype(np.intp),
            tree.value[:, 0, 0].astype(float),
        )

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == _LEAF))

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float32)
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] != _LEAF)
        while active.size:
            at = node[active]
            go_left = X[active, self.feature[at]] <= self.threshold[at]
            node[active] = np.where(go_left, self.left[at], self.right[at])
            active = active[self.feature[node[active]] != _LEAF]
        return self.value[node]


def grow_tree(X: np.ndarray, y: np.ndarray, mtry: int, min_node_size: int, rng: np.random.Generator) -> RegressionTree:
    """Grows one CART regression tree on (X, y); `rng` seeds the candidate-feature draws."""
    estimator = DecisionTreeRegressor(
        max_features=min(mtry, X.shape[1]),
        min_samples_split=min_node_size + 1,
        random_state=int(rng.integers(0, 2**32 - 1)),
    )
    estimator.fit(X, y)
    return RegressionTree.from_estimator(estimator)


# ==========================================
# FOREST
# ==========================================

@dataclass(frozen=True)
class ForestModel:
    """
    A fitted forest on `feature_subset`.

    `in_bag[t, i]` is how many times row i was drawn into tree t's bootstrap;
    it is None for forests restored from disk.
    """
    feature_subset: tuple[int, ...]
    trees: tuple[RegressionTree, ...]
    in_bag: Optional[np.ndarray]

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def tree_predictions(self, X_subset: np.ndarray) -> np.ndarray:
        return np.vstack([tree.predict(X_subset) for tree in self.trees])

    def predict(self, X_subset: np.ndarray) -> np.ndarray:
        return self.tree_predictions(X_subset).mean(axis=0)


def mtry_for(n_features: int, fraction: float) -> int:
    # the fraction is read as the nearest simple ratio, so a third of 30 is exactly 10
    ratio = Fraction(fraction).limit_denominator(1_000_000)
    return max(1, math.ceil(ratio * n_features))


def fit_forest(
    data: Dataset,
    subset: Sequence[int],
    spec: BaseRegressorSpec,
    seed: int,
    *,
    final: bool = False,
    threads: int = 1,
) -> ForestModel:
    """
    Fits a regression forest on the columns in `subset`.

    Formation-time forests use `n_trees_formation` trees, final ones
    `n_trees_final`. Tree t draws its bootstrap and candidate features from
    a stream derived from (seed, t), so `threads` never changes the result.
    """
    if spec.kind != BaseKind.FOREST:
        raise ContractViolation(f"forest operation called with a '{spec.kind.value}' spec")
    subset = subset_key(subset)
    if not subset:
        raise ContractViolation("feature subset is empty")
    if subset[-1] >= data.D:
        raise ContractViolation(f"feature index {subset[-1]} out of range for {data.D} features")
    require_trainable(data)

    params = spec.forest
    n_trees = params.n_trees_final if final else params.n_trees_formation
    X = data.X[:, subset]
    y = data.y
    n = data.n
    mtry = mtry_for(len(subset), params.mtry_fraction)

    def grow(t: int) -> tuple[RegressionTree, np.ndarray]:
        rng = rng_for(seed, "tree", t)
        bag = rng.integers(0, n, size=n)
        tree = grow_tree(X[bag], y[bag], mtry, params.min_node_size, rng)
        return tree, np.bincount(bag, minlength=n)

    grown = map_ordered(grow, range(n_trees), threads)
    in_bag = np.vstack([counts for _, counts in grown])
    return ForestModel(subset, tuple(tree for tree, _ in grown), in_bag)


def oob_predictions(model: ForestModel, data: Dataset) -> PredictionVector:
    """
    Out-of-bag prediction for every training row.

    Row i averages the trees whose bootstrap left it out. A row that every
    tree drew in-bag has no such tree; it falls back to the response mean and
    the fallback is counted and logged.
    """
    if model.in_bag is None or model.in_bag.shape[1] != data.n:
        raise ContractViolation("OOB predictions need the forest's in-bag records for this dataset")
    per_tree = model.tree_predictions(data.X[:, list(model.feature_subset)])
    out_of_bag = model.in_bag == 0
    counts = out_of_bag.sum(axis=0)
    sums = np.where(out_of_bag, per_tree, 0.0).sum(axis=0)
    covered = counts > 0
    preds = np.full(data.n, float(data.y.mean()))
    preds[covered] = sums[covered] / counts[covered]
    fallback = int(np.sum(~covered))
    if fallback:
        logger.warning(kv("oob_fallback", rows=fallback, trees=model.n_trees))
    return PredictionVector(preds, Provenance.OOB, fallback_rows=fallback)
