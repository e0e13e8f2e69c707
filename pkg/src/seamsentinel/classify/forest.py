"""Random forest of fully grown Gini trees.

Each tree is grown on a bootstrap resample.  At every node ``ceil(sqrt(d))``
candidate features are drawn from a generator keyed by
``(seed, tree index, node index)``; if none of them admits a split the
remaining features are tried in the same drawn order, so trees always grow
until their leaves are pure or the samples are indistinguishable.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from seamsentinel.classify.dataset import Dataset, check_schema
from seamsentinel.classify.rng import derive_rng
from seamsentinel.features import FeatureVector, Scheme
from seamsentinel.signal import Scenario

LEAF = -1


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat array representation; node 0 is the root.

    Internal nodes have ``feature >= 0`` and route ``x[feature] <= threshold``
    to ``left``.  ``value`` holds the class distribution of every node
    (fractions over the forest's class list).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while np.any(active):
            idx = np.nonzero(active)[0]
            f = self.feature[node[idx]]
            go_left = X[idx, f] <= self.threshold[node[idx]]
            node[idx] = np.where(go_left, self.left[node[idx]], self.right[node[idx]])
            active = self.feature[node] != LEAF
        return node

    def predict_distribution(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


def gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return 1.0 - float(np.dot(p, p))


def _best_split_on_feature(x: np.ndarray, y: np.ndarray, n_classes: int,
                           parent_counts: np.ndarray):
    """Best threshold for one feature: ``(decrease, threshold)`` or ``None``.

    ``decrease`` is ``n * (gini(parent) - weighted child gini)``; thresholds
    are midpoints between consecutive distinct values.
    """
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    distinct = xs[1:] > xs[:-1]
    if not np.any(distinct):
        return None
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), ys] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    right = parent_counts[None, :] - left
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    # n * weighted child impurity = n_l - sum(l^2)/n_l + n_r - sum(r^2)/n_r
    child = (n_left - np.sum(left * left, axis=1) / n_left
             + n_right - np.sum(right * right, axis=1) / n_right)
    child = np.where(distinct, child, np.inf)
    parent = n * gini(parent_counts)
    decrease = parent - child
    best = float(np.max(decrease))
    # lowest threshold among ties; tiny tolerance absorbs summation noise
    k = int(np.nonzero(decrease >= best - 1e-12 * max(1.0, abs(parent)))[0][0])
    threshold = 0.5 * (xs[k] + xs[k + 1])
    if not threshold < xs[k + 1]:
        threshold = xs[k]
    return best, threshold


def grow_tree(X: np.ndarray, y: np.ndarray, n_classes: int, max_features: int,
              seed: int, tree_index: int) -> tuple[Tree, np.ndarray]:
    """Grow one fully grown tree; returns the tree and its per-feature total
    impurity decrease (weighted by node sample counts)."""
    d = X.shape[1]
    importances = np.zeros(d)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(counts):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(counts / counts.sum())
        return len(feature) - 1

    root_counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    stack = [(new_node(root_counts), np.arange(len(y)))]
    while stack:
        node, idx = stack.pop(0)
        ys = y[idx]
        counts = np.bincount(ys, minlength=n_classes).astype(np.float64)
        if np.count_nonzero(counts) < 2:
            continue
        rng = derive_rng(seed, "forest.node", tree_index, node)
        order = rng.permutation(d)
        best = None
        for pos, f in enumerate(order):
            if pos >= max_features and best is not None:
                break
            found = _best_split_on_feature(X[idx, f], ys, n_classes, counts)
            if found is None:
                continue
            dec, thr = found
            # ties: lowest feature index, then lowest threshold
            if (best is None or dec > best[0] + 1e-12 * len(idx)
                    or (abs(dec - best[0]) <= 1e-12 * len(idx) and (f, thr) < (best[1], best[2]))):
                best = (dec, int(f), thr)
        if best is None:
            continue
        dec, f, thr = best
        go_left = X[idx, f] <= thr
        l_idx, r_idx = idx[go_left], idx[~go_left]
        importances[f] += dec
        feature[node], threshold[node] = f, thr
        lc = np.bincount(y[l_idx], minlength=n_classes).astype(np.float64)
        rc = np.bincount(y[r_idx], minlength=n_classes).astype(np.float64)
        left[node] = new_node(lc)
        right[node] = new_node(rc)
        stack.append((left[node], l_idx))
        stack.append((right[node], r_idx))
    tree = Tree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(value, dtype=np.float64))
    return tree, importances


@dataclass(frozen=True, eq=False)
class ForestModel:
    names: tuple[str, ...]
    scheme: Scheme
    scenario: Scenario | None
    classes: tuple[int, ...]
    trees: tuple[Tree, ...]
    feature_importances: np.ndarray
    seed: int = 0
    info: dict = field(default_factory=dict)

    kind = "forest"

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def summed_distribution(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64).reshape(-1, len(self.names))
        total = np.zeros((len(X), len(self.classes)))
        for t in self.trees:
            total += t.predict_distribution(X)
        return total

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.classes)[np.argmax(self.summed_distribution(X), axis=1)]

    def predict(self, fv: FeatureVector) -> int:
        check_schema(self.names, fv.names)
        return int(self.predict_matrix(fv.values[None, :])[0])


def _train_tree(args):
    X, y, n_classes, max_features, seed, t = args
    n = len(y)
    boot = derive_rng(seed, "forest.bootstrap", t).integers(0, n, size=n)
    return grow_tree(X[boot], y[boot], n_classes, max_features, seed, t)


def train_random_forest(train: Dataset, n_trees: int = 100, seed: int = 0,
                        max_features: int | None = None, n_jobs: int = 1) -> ForestModel:
    """Bagged Gini trees; importances are the normalised total impurity
    decrease per feature over the whole forest."""
    if n_trees < 1:
        raise ValueError("n_trees must be positive")
    classes = tuple(int(c) for c in train.classes)
    if len(classes) < 2:
        raise ValueError("training data needs at least 2 classes")
    y = np.searchsorted(np.asarray(classes), train.y)
    d = len(train.names)
    k = max_features if max_features is not None else math.ceil(math.sqrt(d))
    jobs = [(train.X, y, len(classes), k, seed, t) for t in range(n_trees)]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_train_tree, jobs))
    else:
        results = [_train_tree(j) for j in jobs]
    trees = tuple(r[0] for r in results)
    total = np.zeros(d)
    for _, imp in results:
        total += imp
    s = total.sum()
    importances = total / s if s > 0 else np.full(d, 1.0 / d)
    return ForestModel(train.names, train.scheme, train.scenario, classes, trees,
                       importances, int(seed))


def feature_importance(model: ForestModel) -> list[tuple[str, float]]:
    """Features ranked by importance, descending; ties keep feature order."""
    order = sorted(range(len(model.names)), key=lambda i: (-model.feature_importances[i], i))
    return [(model.names[i], float(model.feature_importances[i])) for i in order]
