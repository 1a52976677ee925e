import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import oracle_propagate
from emotree.corpus import Message, Polarity
from emotree.difftree import (CycleDetected, DiffusionTree, MissingBaseLabel, build_forest, combine,
                              dump_forest_json, height_histogram, propagate, propagate_forest, vote)

P, U, N = Polarity.POSITIVE, Polarity.NEUTRAL, Polarity.NEGATIVE


def test_combine_table():
    assert combine(U, N) == N
    for a, b in itertools.product(Polarity, repeat=2):
        assert combine(a, b) == combine(b, a)
    for a in Polarity:
        assert combine(U, a) == a and combine(a, U) == a
    assert combine(N, N) == N


def test_vote():
    assert vote([P, N]) == U
    assert vote([P, P, N]) == P
    assert vote([]) == U
    assert vote([N, U, U, N, P]) == U


def test_root_tie_goes_neutral():
    tree = DiffusionTree.from_parent_map({"r": None, "a": "r", "b": "r", "a1": "a", "b1": "b"})
    out = propagate(tree, {"r": U, "a": P, "b": N, "a1": P, "b1": N})
    assert out["r"] == U
    assert out.trace["r"].rule == "height-2 pattern"


def test_single_nodes_and_forest_identity():
    forest = build_forest([Message("a", ""), Message("b", "")])
    assert height_histogram(forest) == {0: 2}
    assert height_histogram([]) == {}
    assert forest[0].height == 0 and len(forest[0]) == 1
    msgs = [Message("r", ""), Message("x", "", "r"), Message("y", "", "x"), Message("z", "", "r"), Message("s", "")]
    forest = build_forest(msgs)
    assert sum(len(t) for t in forest) - len(forest) == sum(len(t.edges) for t in forest)


def test_dangling_parent_becomes_root():
    forest = build_forest([Message("a", "", "ghost"), Message("b", "", "a")])
    assert [t.root for t in forest] == ["a"]


def test_cycle_detected():
    with pytest.raises(CycleDetected) as info:
        build_forest([Message("r", ""), Message("a", "", "b"), Message("b", "", "a")])
    assert set(info.value.ids) == {"a", "b"}


def test_missing_base_label():
    tree = DiffusionTree.from_parent_map({"r": None, "a": "r"})
    with pytest.raises(MissingBaseLabel):
        propagate(tree, {"r": P})


def test_depth_cap_excludes_deep_nodes():
    chain = {f"n{i}": (f"n{i - 1}" if i else None) for i in range(7)}
    tree = DiffusionTree.from_parent_map(chain, depth_cap=4)
    assert tree.beyond_influence == {"n5", "n6"}
    base = {f"n{i}": P for i in range(5)}
    base["n4"] = N
    out = propagate(tree, base)
    assert out.trace["n5"].rule == "beyond-cap" and out["n6"] == U
    # n4 is the deepest node that still counts, so n3 sees it as a single leaf
    assert out["n3"] == N
    assert out.trace["n3"].rule == "height-1 transfer"


def test_pattern_height_truncates():
    chain = {f"n{i}": (f"n{i - 1}" if i else None) for i in range(8)}
    tree = DiffusionTree.from_parent_map(chain, depth_cap=10)
    base = {f"n{i}": P for i in range(8)}
    base["n7"] = N
    full = propagate(tree, base, pattern_height=10)
    cut = propagate(tree, base, pattern_height=5)
    assert full["n0"] == N  # leaf n7 disagrees with n1
    assert cut["n0"] == P  # n5 acts as the leaf once the pattern is cut at 5 levels
    with pytest.raises(ValueError):
        propagate(tree, base, pattern_height=0)


def test_trace_records_contributions():
    tree = DiffusionTree.from_parent_map({"r": None, "m": "r", "l": "m"})
    out = propagate(tree, {"r": P, "m": N, "l": P})
    (c,) = out.trace["r"].contributions
    assert (c.leaf, c.leaf_label, c.comparison, c.comparison_label, c.result) == ("l", P, "m", N, N)


def test_dump_json(tables_dir):
    from emotree.corpus import load_messages
    msgs = load_messages(tables_dir / "messages.csv")
    forest = build_forest(msgs)
    base = {m.id: m.gold_label for m in msgs}
    result = propagate_forest(forest, base)
    doc = json.loads(dump_forest_json(forest, base, result))
    assert doc[0]["root"] == "optus"
    root = doc[0]["nodes"][0]
    assert root == {"id": "optus", "parent": None, "depth": 0, "base": "Positive", "propagated": "Neutral",
                    "rule": "height-1 vote"}
    assert {n["rule"] for n in doc[0]["nodes"][1:]} == {"leaf"}


@st.composite
def labelled_trees(draw, max_nodes=12):
    n = draw(st.integers(1, max_nodes))
    parents = [None] + [draw(st.integers(0, i - 1)) for i in range(1, n)]
    labels = [draw(st.sampled_from(list(Polarity))) for _ in range(n)]
    order = draw(st.permutations(list(range(n))))
    return parents, labels, order


@settings(max_examples=300, deadline=None)
@given(labelled_trees(), st.integers(1, 6))
def test_matches_oracle_on_larger_trees_with_truncation(data, pattern_height):
    parents, labels, _ = data
    ids = [f"v{i}" for i in range(len(parents))]
    pmap = {ids[i]: (ids[p] if p is not None else None) for i, p in enumerate(parents)}
    tree = DiffusionTree.from_parent_map(pmap, depth_cap=20)
    base = dict(zip(ids, labels))
    got = propagate(tree, base, pattern_height).propagated
    want = oracle_propagate(pmap, {k: v.title for k, v in base.items()}, pattern_height)
    assert {k: v.title for k, v in got.items()} == want


@settings(max_examples=200, deadline=None)
@given(labelled_trees())
def test_processing_order_does_not_matter(data):
    parents, labels, order = data
    ids = [f"v{i}" for i in range(len(parents))]
    msgs = [Message(ids[i], "", ids[parents[i]] if parents[i] is not None else None) for i in range(len(ids))]
    base = dict(zip(ids, labels))
    a = propagate_forest(build_forest(msgs), base).propagated
    b = propagate_forest(build_forest([msgs[i] for i in order]), base).propagated
    assert a == b


@given(st.sampled_from(list(Polarity)), st.sampled_from(list(Polarity)))
def test_two_node_identity(root_label, leaf_label):
    tree = DiffusionTree.from_parent_map({"r": None, "l": "r"})
    assert propagate(tree, {"r": root_label, "l": leaf_label})["r"] == leaf_label
