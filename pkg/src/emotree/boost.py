"""Gradient-boosted decision trees with ordered target statistics for categorical columns.

This is plain multiclass GBDT (softmax loss, greedy depth-limited regression
trees, Newton leaf values) plus the leakage-free categorical encoding that
CatBoost is known for: each row is encoded from the rows that precede it in
one random permutation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

MAX_DEPTH = 16


class DegenerateData(ValueError):
    pass


class NonFiniteLoss(FloatingPointError):
    pass


class WidthMismatch(ValueError):
    pass


def encode_categorical(values: Sequence, targets: Sequence[float], prior_weight: float = 1.0,
                       seed: int = 0, permutation: Optional[Sequence[int]] = None,
                       prior: Optional[float] = None) -> np.ndarray:
    """Ordered target statistic of each item, returned in the input order.

    Item ``i`` is encoded as ``(S + a*p) / (N + a)`` where ``S`` and ``N`` are the
    target sum and count of same-category items placed before ``i`` in the
    permutation, ``a`` is ``prior_weight`` and ``p`` the global target mean.
    """
    values = list(values)
    targets = np.asarray(targets, dtype=float)
    if len(values) != len(targets):
        raise ValueError("values and targets must have equal length")
    n = len(values)
    if n == 0:
        return np.zeros(0)
    if permutation is None:
        permutation = np.random.default_rng(seed).permutation(n)
    p = float(targets.mean()) if prior is None else float(prior)
    sums: dict = {}
    counts: dict = {}
    out = np.empty(n)
    for i in permutation:
        c = values[i]
        s, k = sums.get(c, 0.0), counts.get(c, 0)
        out[i] = (s + prior_weight * p) / (k + prior_weight)
        sums[c] = s + targets[i]
        counts[c] = k + 1
    return out


def _softmax(F):
    Z = F - F.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def _log_loss(F, Y):
    Z = F - F.max(axis=1, keepdims=True)
    logp = Z - np.log(np.exp(Z).sum(axis=1, keepdims=True))
    return float(-(Y * logp).sum() / Y.shape[0])


@dataclass
class _Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def apply(self, X):
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.left[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.left[node] >= 0
        return node

    def predict(self, X):
        return self.value[self.apply(X)]

    @property
    def depth(self) -> int:
        def rec(i):
            return 0 if self.left[i] < 0 else 1 + max(rec(self.left[i]), rec(self.right[i]))
        return rec(0)

    def to_dict(self, i=0) -> dict:
        if self.left[i] < 0:
            return {"value": float(self.value[i])}
        return {
            "feature": int(self.feature[i]),
            "threshold": float(self.threshold[i]),
            "left": self.to_dict(int(self.left[i])),
            "right": self.to_dict(int(self.right[i])),
        }


class _TreeBuilder:
    """Greedy squared-error splits over presorted columns."""

    def __init__(self, X, max_depth, min_samples_leaf):
        self.X = X
        self.order = np.argsort(X, axis=0, kind="stable")
        self.xs = np.take_along_axis(X, self.order, axis=0)
        self.distinct = self.xs[:-1] < self.xs[1:]
        self.max_depth = max_depth
        self.min_leaf = min_samples_leaf

    def _best_split(self, mask, r):
        m = mask[self.order]
        cs = np.cumsum(np.where(m, r[self.order], 0.0), axis=0)
        cnt = np.cumsum(m, axis=0)
        G, N = cs[-1, 0], cnt[-1, 0]
        gl, nl = cs[:-1], cnt[:-1]
        gr, nr = G - gl, N - nl
        ok = self.distinct & m[:-1] & (nl >= self.min_leaf) & (nr >= self.min_leaf)
        if not ok.any():
            return None
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = gl * gl / nl + gr * gr / nr - G * G / N
        gain = np.where(ok, gain, -np.inf).T  # rows = features, so ties go to the lowest feature
        flat = int(np.argmax(gain))
        f, pos = divmod(flat, gain.shape[1])
        if not gain[f, pos] > 1e-12:
            return None
        return f, self.xs[pos, f]

    def build(self, r, h, l2, scale):
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node():
            for lst, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (value, 0.0)):
                lst.append(v)
            return len(feature) - 1

        root = new_node()
        stack = [(root, np.ones(self.X.shape[0], dtype=bool), 0)]
        while stack:
            node, mask, depth = stack.pop()
            split = self._best_split(mask, r) if depth < self.max_depth and mask.sum() >= 2 * self.min_leaf else None
            if split is None:
                value[node] = scale * r[mask].sum() / (h[mask].sum() + l2)
                continue
            f, thr = split
            go_left = mask & (self.X[:, f] <= thr)
            feature[node], threshold[node] = f, thr
            left[node], right[node] = new_node(), new_node()
            stack.append((right[node], mask & ~go_left, depth + 1))
            stack.append((left[node], go_left, depth + 1))
        return _Tree(np.array(feature), np.array(threshold, dtype=float), np.array(left),
                     np.array(right), np.array(value, dtype=float))


class GradientBoostedTrees(BaseEstimator, ClassifierMixin):
    """Multiclass gradient boosting over binary regression trees.

    Parameters
    ----------
    n_estimators : int
        Boosting iterations; each adds one tree per class. ``0`` gives the
        class-prior model.
    learning_rate : float
    max_depth : int
        Depth bound of every tree, 1..16.
    l2_leaf_reg : float
        Added to the hessian sum of each Newton leaf value.
    cat_features : sequence of int
        Columns holding categories (any hashable); encoded with ordered target
        statistics, one column per class.
    prior_weight : float
        Weight ``a`` of the prior in the target statistic.
    random_state : int
        Seeds the permutation behind the categorical encoding.

    Training log-loss is kept in ``loss_curve_``. An iteration whose step
    would raise the loss is shrunk by halving until it does not, so the curve
    is non-increasing.
    """

    def __init__(self, n_estimators=2000, learning_rate=0.1, max_depth=6, l2_leaf_reg=1.0,
                 min_samples_leaf=1, cat_features=(), prior_weight=1.0, random_state=0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.l2_leaf_reg = l2_leaf_reg
        self.min_samples_leaf = min_samples_leaf
        self.cat_features = cat_features
        self.prior_weight = prior_weight
        self.random_state = random_state

    def _check_params(self):
        if self.n_estimators < 0:
            raise ValueError("n_estimators must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 1 <= self.max_depth <= MAX_DEPTH:
            raise ValueError(f"max_depth must be in [1, {MAX_DEPTH}]")

    def _split_columns(self, X):
        X = np.asarray(X, dtype=object) if self.cat_features else np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be 2-dimensional")
        cats = sorted(set(int(c) for c in self.cat_features))
        nums = [j for j in range(X.shape[1]) if j not in cats]
        num = X[:, nums].astype(float)
        if not np.isfinite(num).all():
            raise ValueError("features must be finite (no NaN or inf)")
        return num, [X[:, j] for j in cats]

    def fit(self, X, y):
        self._check_params()
        y = np.asarray(y)
        num, cats = self._split_columns(X)
        if num.shape[0] != y.shape[0]:
            raise ValueError("X and y have different numbers of rows")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise DegenerateData(f"need at least 2 classes, got {list(self.classes_)}")
        self.n_features_in_ = num.shape[1] + len(cats)
        n, K = y_idx.shape[0], len(self.classes_)
        Y = np.eye(K)[y_idx]
        prior = Y.mean(axis=0)

        # categorical -> K columns of ordered target statistics
        perm = np.random.default_rng(self.random_state).permutation(n)
        self.cat_stats_ = []
        encoded = []
        for col in cats:
            stats = {}
            for c, row in zip(col, Y):
                s, k = stats.get(c, (np.zeros(K), 0))
                stats[c] = (s + row, k + 1)
            self.cat_stats_.append(stats)
            for k in range(K):
                encoded.append(encode_categorical(col, Y[:, k], self.prior_weight, permutation=perm, prior=prior[k]))
        self.prior_ = prior
        design = np.column_stack([num] + encoded) if encoded else num

        self.init_score_ = np.log(prior)
        F = np.tile(self.init_score_, (n, 1))
        loss = _log_loss(F, Y)
        self.loss_curve_ = [loss]
        self.estimators_ = []
        builder = _TreeBuilder(design, self.max_depth, self.min_samples_leaf)
        newton_scale = (K - 1) / K
        for _ in range(self.n_estimators):
            P = _softmax(F)
            R = Y - P
            H = np.maximum(P * (1 - P), 1e-16)
            trees = [builder.build(R[:, k], H[:, k], self.l2_leaf_reg, newton_scale) for k in range(K)]
            step = np.column_stack([t.predict(design) for t in trees])
            rate = self.learning_rate
            for _halving in range(60):
                new_loss = _log_loss(F + rate * step, Y)
                if new_loss <= loss:
                    break
                rate *= 0.5
            else:
                rate, new_loss = 0.0, loss
            if not np.isfinite(new_loss):
                raise NonFiniteLoss(f"training loss became {new_loss}")
            for t in trees:
                t.value = t.value * rate
            F = F + rate * step
            loss = new_loss
            self.loss_curve_.append(loss)
            self.estimators_.append(trees)
        return self

    def _design(self, X):
        check_is_fitted(self, "estimators_")
        X = np.asarray(X, dtype=object if self.cat_features else float)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise WidthMismatch(f"expected {self.n_features_in_} features, got {X.shape[-1] if X.ndim else 0}")
        num, cats = self._split_columns(X)
        K = len(self.classes_)
        cols = [num]
        for col, stats in zip(cats, self.cat_stats_):
            enc = np.empty((len(col), K))
            for i, c in enumerate(col):
                s, k = stats.get(c, (np.zeros(K), 0))
                enc[i] = (s + self.prior_weight * self.prior_) / (k + self.prior_weight)
            cols.append(enc)
        return np.column_stack(cols)

    def decision_function(self, X) -> np.ndarray:
        design = self._design(X)
        F = np.tile(self.init_score_, (design.shape[0], 1))
        for trees in self.estimators_:
            for k, t in enumerate(trees):
                F[:, k] += t.predict(design)
        return F

    def predict_proba(self, X) -> np.ndarray:
        return _softmax(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        # argmax returns the first maximum, so exact ties follow class order
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]

    def to_dict(self) -> dict:
        check_is_fitted(self, "estimators_")
        return {
            "classes": [c.item() if hasattr(c, "item") else c for c in self.classes_],
            "init_score": self.init_score_.tolist(),
            "params": self.get_params(),
            "trees": [[t.to_dict() for t in trees] for trees in self.estimators_],
        }

    def to_json(self) -> str:
        d = self.to_dict()
        d["params"]["cat_features"] = list(d["params"]["cat_features"])
        return json.dumps(d, sort_keys=True)


@dataclass(frozen=True)
class BoostConfig:
    learning_rate: float = 0.1
    tree_depth: int = 6
    iterations: int = 2000
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 1 <= self.tree_depth <= MAX_DEPTH:
            raise ValueError(f"tree_depth must be in [1, {MAX_DEPTH}]")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")

    def estimator(self, **kwargs) -> GradientBoostedTrees:
        return GradientBoostedTrees(n_estimators=self.iterations, learning_rate=self.learning_rate,
                                    max_depth=self.tree_depth, random_state=self.seed, **kwargs)
