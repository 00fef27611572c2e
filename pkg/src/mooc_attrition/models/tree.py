"""CART classification tree used for Gini-importance feature ranking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DataError


@dataclass
class TreeNode:
    split_feature: int | None
    split_threshold: float
    gini_decrease: float
    sample_fraction: float
    class_distribution: np.ndarray
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.split_feature is None

    def iter_nodes(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.extend((node.right, node.left))


def gini(y: np.ndarray) -> float:
    if len(y) == 0:
        return 0.0
    p = y.mean()
    return 1.0 - p * p - (1.0 - p) ** 2


_EPS = 1e-12


def best_split(X: np.ndarray, y: np.ndarray) -> tuple[int, float, float] | None:
    """Best (feature, threshold, impurity decrease) for binary labels ``y``.

    Thresholds are midpoints between consecutive distinct values.  Ties go to
    the lowest feature index, then the lowest threshold.  ``None`` when no
    feature has two distinct values.
    """
    n = len(y)
    parent = gini(y)
    best: tuple[int, float, float] | None = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], y[order]
        cut = np.flatnonzero(xs[:-1] < xs[1:])
        if cut.size == 0:
            continue
        n_left = cut + 1.0
        pos_left = np.cumsum(ys)[cut]
        pos_total = ys.sum()
        n_right = n - n_left
        pl = pos_left / n_left
        pr = (pos_total - pos_left) / n_right
        g_left = 1.0 - pl**2 - (1.0 - pl) ** 2
        g_right = 1.0 - pr**2 - (1.0 - pr) ** 2
        decrease = parent - (n_left * g_left + n_right * g_right) / n
        k = int(np.flatnonzero(decrease >= decrease.max() - _EPS)[0])
        if best is None or decrease[k] > best[2] + _EPS:
            i = cut[k]
            best = (f, 0.5 * (xs[i] + xs[i + 1]), max(float(decrease[k]), 0.0))
    return best


def grow_tree(X: np.ndarray, y: np.ndarray, min_samples_split: int = 2) -> TreeNode:
    """Grow until every leaf is pure or too small to split."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(float)
    n_total = len(y)

    def make(idx: np.ndarray) -> TreeNode:
        ys = y[idx]
        dist = np.array([1.0 - ys.mean(), ys.mean()])
        return TreeNode(None, 0.0, 0.0, len(idx) / n_total, dist)

    root_idx = np.arange(n_total)
    root = make(root_idx)
    stack = [(root, root_idx)]
    while stack:
        node, idx = stack.pop()
        ys = y[idx]
        if len(idx) < min_samples_split or gini(ys) == 0.0:
            continue
        split = best_split(X[idx], ys)
        if split is None:
            continue
        f, thr, dec = split
        mask = X[idx, f] <= thr
        node.split_feature, node.split_threshold, node.gini_decrease = f, float(thr), dec
        node.left, node.right = make(idx[mask]), make(idx[~mask])
        stack.append((node.right, idx[~mask]))
        stack.append((node.left, idx[mask]))
    return root


def predict_proba(tree: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X))
    for i, x in enumerate(np.asarray(X, dtype=float)):
        node = tree
        while not node.is_leaf:
            node = node.left if x[node.split_feature] <= node.split_threshold else node.right
        out[i] = node.class_distribution[1]
    return out


def tree_importances(tree: TreeNode, n_features: int) -> np.ndarray:
    imp = np.zeros(n_features)
    for node in tree.iter_nodes():
        if not node.is_leaf:
            imp[node.split_feature] += node.sample_fraction * node.gini_decrease
    total = imp.sum()
    return imp / total if total > 0 else imp


def gini_importance(X: np.ndarray, y: np.ndarray, feature_names: Sequence[str] | None = None) -> dict[str, float]:
    """Normalised impurity-decrease importance of every feature."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int)
    if len(y) < 2 or len(np.unique(y)) < 2:
        raise DataError("feature importance needs at least two rows and both classes")
    names = list(feature_names) if feature_names is not None else [f"x{k}" for k in range(X.shape[1])]
    imp = tree_importances(grow_tree(X, y), X.shape[1])
    return dict(zip(names, imp.tolist()))
