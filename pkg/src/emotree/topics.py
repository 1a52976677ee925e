"""LDA by collapsed Gibbs sampling, and per-user interest vectors."""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import FamousMember, UserProfile


class EmptyVocabulary(ValueError):
    pass


@njit(cache=True)
def _sweep(words, docs, z, n_dk, n_kw, n_k, alpha, beta, vbeta, uniforms, fixed_phi):
    """One pass over every token. ``fixed_phi`` (K x V) freezes the topic-word side when non-empty."""
    K = n_dk.shape[1]
    p = np.empty(K)
    use_phi = fixed_phi.shape[0] > 0
    for i in range(words.shape[0]):
        w = words[i]
        d = docs[i]
        k = z[i]
        n_dk[d, k] -= 1
        if not use_phi:
            n_kw[k, w] -= 1
            n_k[k] -= 1
        total = 0.0
        for t in range(K):
            if use_phi:
                p[t] = (n_dk[d, t] + alpha) * fixed_phi[t, w]
            else:
                p[t] = (n_dk[d, t] + alpha) * (n_kw[t, w] + beta) / (n_k[t] + vbeta)
            total += p[t]
        r = uniforms[i] * total
        acc = 0.0
        k = K - 1
        for t in range(K):
            acc += p[t]
            if r < acc:
                k = t
                break
        z[i] = k
        n_dk[d, k] += 1
        if not use_phi:
            n_kw[k, w] += 1
            n_k[k] += 1


_NO_PHI = np.zeros((0, 0))


def _doc_seed(seed: int, tokens: Sequence[str]) -> list[int]:
    return [int(seed), zlib.crc32(" ".join(tokens).encode("utf-8"))]


@dataclass(frozen=True)
class InterestVector:
    user_id: str
    theta: np.ndarray


class GibbsLDA(BaseEstimator, TransformerMixin):
    """Latent Dirichlet allocation fitted with a collapsed Gibbs sampler.

    ``fit`` takes a list of token sequences. ``transform`` returns the
    document-topic matrix of new documents, sampled with the topic-word
    distribution held fixed.

    Parameters
    ----------
    n_topics : int
    alpha : float or None
        Symmetric document-topic prior; ``None`` means ``50 / n_topics``.
    beta : float
        Symmetric topic-word prior.
    n_iter : int
        Gibbs sweeps during fit.
    infer_iter : int
        Gibbs sweeps per held-out document.
    random_state : int
    """

    def __init__(self, n_topics=19, alpha=None, beta=0.01, n_iter=1000, infer_iter=50, random_state=0):
        self.n_topics = n_topics
        self.alpha = alpha
        self.beta = beta
        self.n_iter = n_iter
        self.infer_iter = infer_iter
        self.random_state = random_state

    @property
    def alpha_(self) -> float:
        return 50.0 / self.n_topics if self.alpha is None else float(self.alpha)

    def _encode(self, docs):
        vocab = {}
        for doc in docs:
            for tok in doc:
                if tok not in vocab:
                    vocab[tok] = len(vocab)
        return vocab

    def fit(self, X, y=None, on_sweep: Optional[Callable] = None):
        if self.n_topics < 1:
            raise ValueError("n_topics must be >= 1")
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        docs = [list(d) for d in X]
        if not docs:
            raise ValueError("empty corpus")
        vocab = self._encode(docs)
        if not vocab:
            raise EmptyVocabulary("no tokens in any document")
        K, V, D = self.n_topics, len(vocab), len(docs)
        words = np.array([vocab[t] for d in docs for t in d], dtype=np.int64)
        doc_ids = np.repeat(np.arange(D, dtype=np.int64), [len(d) for d in docs])

        rng = np.random.default_rng(self.random_state)
        z = rng.integers(0, K, size=words.shape[0]).astype(np.int64)
        n_dk = np.zeros((D, K), dtype=np.int64)
        n_kw = np.zeros((K, V), dtype=np.int64)
        np.add.at(n_dk, (doc_ids, z), 1)
        np.add.at(n_kw, (z, words), 1)
        n_k = n_kw.sum(axis=1)

        alpha, beta = self.alpha_, float(self.beta)
        for it in range(self.n_iter):
            _sweep(words, doc_ids, z, n_dk, n_kw, n_k, alpha, beta, V * beta, rng.random(words.shape[0]), _NO_PHI)
            if on_sweep is not None:
                on_sweep(it, n_dk, n_kw, n_k)

        self.vocabulary_ = vocab
        self.vocab_ = list(vocab)
        self.topic_word_counts_ = n_kw
        self.components_ = (n_kw + beta) / (n_k[:, None] + V * beta)
        self.doc_topic_ = (n_dk + alpha) / (n_dk.sum(axis=1, keepdims=True) + K * alpha)
        offsets = np.cumsum([0] + [len(d) for d in docs])
        self.assignments_ = [z[offsets[i]:offsets[i + 1]].copy() for i in range(D)]
        return self

    def infer(self, doc: Sequence[str]) -> np.ndarray:
        """Topic mixture of one document; unknown tokens are skipped."""
        check_is_fitted(self, "components_")
        K = self.n_topics
        alpha = self.alpha_
        words = np.array([self.vocabulary_[t] for t in doc if t in self.vocabulary_], dtype=np.int64)
        if words.size == 0:
            return np.full(K, 1.0 / K)
        rng = np.random.default_rng(_doc_seed(self.random_state, list(doc)))
        doc_ids = np.zeros(words.shape[0], dtype=np.int64)
        z = rng.integers(0, K, size=words.shape[0]).astype(np.int64)
        n_dk = np.zeros((1, K), dtype=np.int64)
        np.add.at(n_dk, (doc_ids, z), 1)
        dummy_kw = np.zeros((K, 1), dtype=np.int64)
        dummy_k = np.zeros(K, dtype=np.int64)
        for _ in range(self.infer_iter):
            _sweep(words, doc_ids, z, n_dk, dummy_kw, dummy_k, alpha, 0.0, 0.0,
                   rng.random(words.shape[0]), self.components_)
        return (n_dk[0] + alpha) / (words.shape[0] + K * alpha)

    def transform(self, X) -> np.ndarray:
        return np.vstack([self.infer(list(d)) for d in X]) if len(X) else np.zeros((0, self.n_topics))

    def top_words(self, n=10) -> list[list[str]]:
        check_is_fitted(self, "components_")
        return [[self.vocab_[i] for i in np.argsort(-row, kind="stable")[:n]] for row in self.components_]

    def to_dict(self) -> dict:
        check_is_fitted(self, "components_")
        return {
            "vocab": self.vocab_,
            "phi": self.components_.tolist(),
            "alpha": self.alpha_,
            "beta": float(self.beta),
            "seed": self.random_state,
            "n_topics": self.n_topics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def fit_lda(docs, K=19, alpha=None, beta=0.01, iters=1000, seed=0) -> GibbsLDA:
    return GibbsLDA(n_topics=K, alpha=alpha, beta=beta, n_iter=iters, random_state=seed).fit(docs)


def infer_theta(doc, model: GibbsLDA) -> np.ndarray:
    return model.infer(list(doc))


def influencer_document(member: FamousMember, profile: Optional[UserProfile] = None,
                        wiki_text: Optional[str] = None) -> str:
    """Text describing an influential account: bio, activity and optional wiki text."""
    parts = [profile.bio if profile else "", member.activity, wiki_text or ""]
    return " ".join(p for p in parts if p)


def user_interest(user: UserProfile, famous_thetas: Mapping[str, np.ndarray], n_topics: int) -> InterestVector:
    """Mean topic mixture of the famous accounts a user follows; uniform if none."""
    thetas = [famous_thetas[h] for h in sorted(user.follows) if h in famous_thetas]
    if not thetas:
        return InterestVector(user.id, np.full(n_topics, 1.0 / n_topics))
    mean = np.mean(thetas, axis=0)
    return InterestVector(user.id, mean / mean.sum())


def topic_report(model: GibbsLDA, n_words=8) -> list[dict]:
    """Top words of each topic, for naming interest groups by inspection."""
    return [{"topic": k, "top_words": words} for k, words in enumerate(model.top_words(n_words))]
