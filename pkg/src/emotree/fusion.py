"""One-hidden-layer perceptron that fuses the channel outputs into the final label."""
from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .boost import NonFiniteLoss, WidthMismatch

PARAM_NAMES = ("W1", "b1", "W2", "b2")


def init_params(n_in: int, n_hidden: int = 16, n_out: int = 3, rng=None) -> dict:
    rng = np.random.default_rng(rng)
    return {
        "W1": rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, n_hidden)),
        "b1": np.zeros(n_hidden),
        "W2": rng.normal(0.0, np.sqrt(1.0 / n_hidden), size=(n_hidden, n_out)),
        "b2": np.zeros(n_out),
    }


def _softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def forward(params: dict, X) -> np.ndarray:
    """softmax(relu(X W1 + b1) W2 + b2), row per sample."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params["W1"].shape[0]:
        raise WidthMismatch(f"expected {params['W1'].shape[0]} features, got {X.shape[1]}")
    hidden = np.maximum(X @ params["W1"] + params["b1"], 0.0)
    return _softmax(hidden @ params["W2"] + params["b2"])


def cross_entropy(params: dict, X, y) -> float:
    P = forward(params, X)
    return float(-np.mean(np.log(np.maximum(P[np.arange(len(y)), y], 1e-300))))


def loss_and_grad(params: dict, X, y):
    """Mean cross-entropy and its gradient w.r.t. every parameter."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    n = X.shape[0]
    pre = X @ params["W1"] + params["b1"]
    hidden = np.maximum(pre, 0.0)
    P = _softmax(hidden @ params["W2"] + params["b2"])
    loss = float(-np.mean(np.log(np.maximum(P[np.arange(n), y], 1e-300))))
    dZ2 = P.copy()
    dZ2[np.arange(n), y] -= 1.0
    dZ2 /= n
    dH = dZ2 @ params["W2"].T
    dH[pre <= 0] = 0.0
    grads = {
        "W2": hidden.T @ dZ2,
        "b2": dZ2.sum(axis=0),
        "W1": X.T @ dH,
        "b1": dH.sum(axis=0),
    }
    return loss, grads


def grad_check(params: dict, X, y, h: float = 1e-5) -> float:
    """Largest relative gap between backprop and central finite differences.

    The relative error is ``|a - n| / max(|a| + |n|, 1e-8)``.
    """
    _, grads = loss_and_grad(params, X, y)
    worst = 0.0
    for name in PARAM_NAMES:
        p = params[name]
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            up = cross_entropy(params, X, y)
            p[idx] = orig - h
            down = cross_entropy(params, X, y)
            p[idx] = orig
            numeric = (up - down) / (2 * h)
            analytic = grads[name][idx]
            rel = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-8)
            worst = max(worst, rel)
    return worst


class FusionMLP(BaseEstimator, ClassifierMixin):
    """ReLU MLP classifier trained by mini-batch gradient descent on cross-entropy.

    The output layer always has one unit per entry of ``classes``, so a label
    missing from the training data still gets a probability. Predictions take
    the argmax, exact ties going to the earlier class.

    When ``validation_fraction`` leaves at least one sample aside, training
    stops after ``patience`` epochs without validation improvement and the best
    parameters are kept.
    """

    def __init__(self, n_hidden=16, learning_rate=0.05, momentum=0.9, epochs=300, batch_size=32,
                 validation_fraction=0.2, patience=20, classes=(0, 1, 2), random_state=0):
        self.n_hidden = n_hidden
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.epochs = epochs
        self.batch_size = batch_size
        self.validation_fraction = validation_fraction
        self.patience = patience
        self.classes = classes
        self.random_state = random_state

    def _encode(self, y):
        lookup = {c: i for i, c in enumerate(self.classes)}
        try:
            return np.array([lookup[v] for v in np.asarray(y).tolist()], dtype=int)
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} not in classes {tuple(self.classes)}") from None

    def fit(self, X, y):
        X = check_array(X, dtype=float)
        y_idx = self._encode(y)
        if len(y_idx) != X.shape[0]:
            raise ValueError("X and y have different numbers of rows")
        self.classes_ = np.asarray(self.classes)
        self.n_features_in_ = X.shape[1]
        rng = np.random.default_rng(self.random_state)
        params = init_params(X.shape[1], self.n_hidden, len(self.classes), rng)

        n = X.shape[0]
        n_val = int(round(n * self.validation_fraction)) if n >= 5 else 0
        order = rng.permutation(n)
        val_idx, train_idx = order[:n_val], order[n_val:]
        Xt, yt = X[train_idx], y_idx[train_idx]
        Xv, yv = X[val_idx], y_idx[val_idx]

        velocity = {k: np.zeros_like(v) for k, v in params.items()}
        self.loss_curve_ = [cross_entropy(params, Xt, yt)]
        self.validation_curve_ = [cross_entropy(params, Xv, yv)] if n_val else []
        best = (self.validation_curve_[0] if n_val else np.inf, {k: v.copy() for k, v in params.items()})
        stale = 0
        for _ in range(self.epochs):
            perm = rng.permutation(len(yt))
            for start in range(0, len(perm), self.batch_size):
                batch = perm[start:start + self.batch_size]
                _, grads = loss_and_grad(params, Xt[batch], yt[batch])
                for k in PARAM_NAMES:
                    velocity[k] = self.momentum * velocity[k] - self.learning_rate * grads[k]
                    params[k] += velocity[k]
            loss = cross_entropy(params, Xt, yt)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"training loss became {loss}")
            self.loss_curve_.append(loss)
            if n_val:
                v = cross_entropy(params, Xv, yv)
                self.validation_curve_.append(v)
                if v < best[0] - 1e-12:
                    best, stale = (v, {k: p.copy() for k, p in params.items()}), 0
                else:
                    stale += 1
                    if stale >= self.patience:
                        break
        self.params_ = best[1] if n_val else params
        self.n_epochs_ = len(self.loss_curve_) - 1
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "params_")
        return forward(self.params_, check_array(X, dtype=float))

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def to_dict(self) -> dict:
        check_is_fitted(self, "params_")
        return {
            "layers": [list(self.params_["W1"].shape), list(self.params_["W2"].shape)],
            "weights": {k: self.params_[k].ravel(order="C").tolist() for k in PARAM_NAMES},
            "seed": self.random_state,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)
