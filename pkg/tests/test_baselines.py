import numpy as np
import pytest
from sklearn.naive_bayes import MultinomialNB

from conftest import small_config
from emotree.baselines import (AUGMENTED_ROWS, PROPOSED_ROW, ROW_NAMES, LinearSVM, baseline, make_classifier,
                               tfidf_vectorizer)
from emotree.boost import DegenerateData
from emotree.corpus import Corpus, Message, Polarity


def test_naive_bayes_separates_disjoint_vocabularies():
    docs = ["happy sunny joy", "joy happy", "sunny day joy", "grim storm rain", "rain grim", "storm cold rain"]
    y = [2, 2, 2, 0, 0, 0]
    X = tfidf_vectorizer().fit_transform(docs)
    assert (MultinomialNB().fit(X, y).predict(X) == y).all()


def test_svm_on_linearly_separable_data():
    rng = np.random.default_rng(0)
    w = rng.normal(size=5)
    X = rng.uniform(-1, 1, size=(600, 5))
    margin = X @ w
    keep = np.abs(margin) > 0.2
    X, y = X[keep], np.where(margin[keep] > 0, 2, 0)
    svm = LinearSVM(random_state=1).fit(X[:400], y[:400])
    assert (svm.predict(X[400:]) == y[400:]).mean() >= 0.95


def test_svm_three_classes_and_determinism():
    X = np.array([[0, 0], [0.1, 0], [5, 5], [5.1, 5], [-5, 5], [-5.1, 5]], dtype=float)
    y = np.array([1, 1, 2, 2, 0, 0])
    a = LinearSVM(epochs=200, random_state=3).fit(X, y)
    b = LinearSVM(epochs=200, random_state=3).fit(X, y)
    assert np.array_equal(a.decision_function(X), b.decision_function(X))
    assert a.predict([[5, 5]]).tolist() == [2]


def test_classifier_kinds():
    cfg = small_config()
    assert isinstance(make_classifier("nb", cfg), MultinomialNB)
    with pytest.raises(ValueError):
        make_classifier("knn", cfg)
    with pytest.raises(ValueError, match="unknown baseline kind"):
        baseline(cfg, kinds=("knn",))


def test_table_rows(small_state):
    cfg, state = small_state
    rep = baseline(cfg, augmented=True, state=state)
    assert rep.configurations == [ROW_NAMES["nb"], ROW_NAMES["mlp"], ROW_NAMES["svm"],
                                  AUGMENTED_ROWS[0][0], AUGMENTED_ROWS[1][0], PROPOSED_ROW]
    for res in rep.results.values():
        assert 0 <= res["accuracy"] <= 1
    assert rep.results[PROPOSED_ROW]["accuracy"] > rep.results[ROW_NAMES["nb"]]["accuracy"]
    plain = baseline(cfg, kinds=("nb",), state=state)
    assert plain.configurations == [ROW_NAMES["nb"]]


def test_single_class_is_degenerate():
    msgs = tuple(Message(f"m{i}", "good day", None, Polarity.POSITIVE) for i in range(10))
    with pytest.raises(DegenerateData):
        baseline(small_config(n_topics=2), kinds=("nb",), corpus=Corpus(msgs))
