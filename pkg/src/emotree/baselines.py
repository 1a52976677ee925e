"""Text-only comparison models: TF-IDF features into Naive Bayes, an MLP or a linear SVM.

The augmented SVM rows append the social channels (diffusion, similarity,
interests) of the main pipeline to the TF-IDF vector, giving the
configuration-rows layout of the comparison table.
"""
from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.feature_extraction.text import TfidfVectorizer
from sklearn.naive_bayes import MultinomialNB
from sklearn.utils.validation import check_array, check_is_fitted

from . import metrics
from .boost import DegenerateData
from .corpus import Polarity
from .fusion import FusionMLP
from .pipeline import PipelineConfig, PipelineState, build_state, feature_matrix, run, substream_seed

logger = logging.getLogger(__name__)

KINDS = ("nb", "mlp", "svm")
ROW_NAMES = {"nb": "TF-IDF + Naive Bayes", "mlp": "TF-IDF + Neural network", "svm": "TF-IDF + SVM"}
AUGMENTED_ROWS = (
    ("TF-IDF + SVM + Interests + Diffusion", ("diffusion", "interests")),
    ("TF-IDF + SVM + Similarity + Interests + Diffusion", ("diffusion", "similarity", "interests")),
)
PROPOSED_ROW = "Proposed model"


def _with_bias(X):
    return np.hstack([X, np.ones((X.shape[0], 1))])


class LinearSVM(BaseEstimator, ClassifierMixin):
    """One-vs-rest linear SVM trained by stochastic subgradient descent on the hinge loss.

    Minimizes ``lam/2 |w|^2 + mean(max(0, 1 - y w.[x, 1]))`` per class with
    the 1/(lam t) step schedule. The bias is the weight of a constant feature.
    """

    def __init__(self, lam=1e-4, epochs=30, random_state=0):
        self.lam = lam
        self.epochs = epochs
        self.random_state = random_state

    def fit(self, X, y):
        X = _with_bias(check_array(X, dtype=float))
        y = np.asarray(y)
        self.classes_ = np.unique(y)
        if len(self.classes_) < 2:
            raise DegenerateData("SVM needs at least two classes")
        rng = np.random.default_rng(self.random_state)
        n, d = X.shape
        n_w = 1 if len(self.classes_) == 2 else len(self.classes_)
        W = np.zeros((n_w, d))
        for k in range(n_w):
            target = self.classes_[1] if n_w == 1 else self.classes_[k]
            s = np.where(y == target, 1.0, -1.0)
            w, t = W[k], 0
            for _ in range(self.epochs):
                for i in rng.permutation(n):
                    t += 1
                    eta = 1.0 / (self.lam * t)
                    margin = s[i] * (X[i] @ w)
                    w *= 1.0 - eta * self.lam
                    if margin < 1.0:
                        w += eta * s[i] * X[i]
        self.coef_, self.intercept_ = W[:, :-1], W[:, -1]
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        scores = check_array(X, dtype=float) @ self.coef_.T + self.intercept_
        return scores[:, 0] if scores.shape[1] == 1 else scores

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        if scores.ndim == 1:
            return self.classes_[(scores > 0).astype(int)]
        return self.classes_[np.argmax(scores, axis=1)]


def tfidf_vectorizer() -> TfidfVectorizer:
    """Unigrams and bigrams over already-normalized tokens, sublinear tf, l2 rows."""
    return TfidfVectorizer(tokenizer=str.split, token_pattern=None, lowercase=False, ngram_range=(1, 2),
                           sublinear_tf=True, norm="l2")


def make_classifier(kind: str, cfg: PipelineConfig):
    seed = substream_seed(cfg.seed, f"baseline:{kind}")
    if kind == "nb":
        return MultinomialNB()
    if kind == "mlp":
        return FusionMLP(n_hidden=cfg.mlp_hidden, learning_rate=cfg.mlp_learning_rate, epochs=cfg.mlp_epochs,
                         batch_size=cfg.mlp_batch_size, patience=cfg.mlp_patience, random_state=seed)
    if kind == "svm":
        return LinearSVM(random_state=seed)
    raise ValueError(f"unknown baseline kind {kind!r}; choose from {list(KINDS)}")


def _documents(state: PipelineState, ids) -> list[str]:
    return [" ".join(state.tokens[i].tokens) for i in ids]


def _fit_eval(clf, Xtr, ytr, Xte, yte) -> dict:
    if len(set(ytr.tolist())) < 2:
        raise DegenerateData("training labels contain fewer than two classes")
    clf.fit(Xtr, ytr)
    pred = [Polarity(int(p)) for p in clf.predict(Xte)]
    return metrics.evaluate([Polarity(int(g)) for g in yte], pred)


def baseline(cfg: PipelineConfig, kinds=KINDS, augmented: bool = False, corpus=None,
             state: Optional[PipelineState] = None) -> metrics.Report:
    """Evaluate TF-IDF baselines on the same seeded split as the main pipeline."""
    unknown = [k for k in kinds if k not in KINDS]
    if unknown:
        raise ValueError(f"unknown baseline kind(s) {unknown}; choose from {list(KINDS)}")
    state = state or build_state(cfg, corpus)
    gold = {m.id: m.gold_label for m in state.corpus.messages}
    if not state.train_ids or not state.test_ids:
        raise DegenerateData("need gold-labelled messages on both sides of the split")
    ytr = np.array([int(gold[i]) for i in state.train_ids])
    yte = np.array([int(gold[i]) for i in state.test_ids])
    vec = tfidf_vectorizer()
    try:
        Ttr = vec.fit_transform(_documents(state, state.train_ids)).toarray()
    except ValueError as exc:
        raise DegenerateData(f"TF-IDF vocabulary is empty: {exc}") from exc
    Tte = vec.transform(_documents(state, state.test_ids)).toarray()

    results = {}
    for kind in kinds:
        results[ROW_NAMES[kind]] = _fit_eval(make_classifier(kind, cfg), Ttr, ytr, Tte, yte)
    if augmented:
        for name, groups in AUGMENTED_ROWS:
            Xtr = np.hstack([Ttr, feature_matrix(state, state.train_ids, groups)])
            Xte = np.hstack([Tte, feature_matrix(state, state.test_ids, groups)])
            results[name] = _fit_eval(make_classifier("svm", cfg), Xtr, ytr, Xte, yte)
        full_cfg = PipelineConfig(**{**cfg.__dict__, "ablations": ("full",)})
        results[PROPOSED_ROW] = run(full_cfg, state=state).results["full"]
    notes = [f"evaluated on {len(state.test_ids)} held-out messages (seed {cfg.seed})"]
    return metrics.report(results, None, notes)
