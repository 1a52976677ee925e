"""Retweet dependency trees and bottom-up sentiment diffusion.

A tree is the triple (nodes, retweet edges, polarity labels). Leaves keep the
label assigned by the base labeler; every internal node is labelled from the
leaves under it:

* subtree height 1 -- a single child's label is transferred to the parent,
  several children vote;
* subtree height >= 2 -- each leaf is compared with the child of the node
  on its path (the intermediate node closest to the top) and ``combine``
  turns the pair into one vote; the plurality wins, ties give Neutral.

Nodes deeper than ``depth_cap`` stay in the tree but take no part in
propagation; subtrees taller than ``pattern_height`` are cut to their top
``pattern_height`` levels.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import Message, Polarity

DEFAULT_DEPTH_CAP = 4
DEFAULT_PATTERN_HEIGHT = 5


class CycleDetected(ValueError):
    def __init__(self, ids):
        self.ids = tuple(sorted(ids))
        super().__init__(f"retweet links form a cycle through {list(self.ids)}")


class MissingBaseLabel(KeyError):
    def __init__(self, node_id):
        self.node_id = node_id
        super().__init__(f"no base label for node {node_id!r}")


@dataclass(frozen=True)
class DiffusionTree:
    root: str
    parent: Mapping[str, str]
    children: Mapping[str, tuple]
    depth: Mapping[str, int]
    depth_cap: int = DEFAULT_DEPTH_CAP

    def __post_init__(self):
        if self.depth_cap < 1:
            raise ValueError("depth_cap must be >= 1")

    @property
    def nodes(self) -> frozenset:
        return frozenset(self.depth)

    @property
    def height(self) -> int:
        return max(self.depth.values())

    @property
    def edges(self) -> list[tuple[str, str]]:
        return [(c, p) for c, p in self.parent.items()]

    def within_cap(self, node: str) -> bool:
        return self.depth[node] <= self.depth_cap

    @property
    def beyond_influence(self) -> frozenset:
        return frozenset(n for n, d in self.depth.items() if d > self.depth_cap)

    def capped_children(self, node: str) -> tuple:
        if self.depth[node] >= self.depth_cap:
            return ()
        return self.children.get(node, ())

    def path_to_root(self, node: str) -> list[str]:
        """Ancestors of ``node`` from its parent up to the root, inclusive."""
        path = []
        while node in self.parent:
            node = self.parent[node]
            path.append(node)
        return path

    def __len__(self):
        return len(self.depth)

    @classmethod
    def from_parent_map(cls, parent: Mapping[str, Optional[str]], depth_cap: int = DEFAULT_DEPTH_CAP):
        """Build one tree from {node: parent or None}; exactly one root is required."""
        msgs = [Message(n, "", p) for n, p in parent.items()]
        forest = build_forest(msgs, depth_cap=depth_cap)
        if len(forest) != 1:
            raise ValueError(f"parent map describes {len(forest)} trees, expected 1")
        return forest[0]


def build_forest(messages: Iterable[Message], depth_cap: int = DEFAULT_DEPTH_CAP) -> list[DiffusionTree]:
    """One tree per root; a message whose parent is missing from the corpus is a root."""
    messages = list(messages)
    order = {m.id: i for i, m in enumerate(messages)}
    if len(order) != len(messages):
        raise ValueError("message ids must be unique")
    kids: dict[str, list] = {}
    roots = []
    for m in messages:
        if m.retweet_of is None or m.retweet_of not in order:
            roots.append(m.id)
        else:
            kids.setdefault(m.retweet_of, []).append(m.id)

    forest = []
    reached = set()
    for root in roots:
        depth = {root: 0}
        parent = {}
        children = {}
        stack = [root]
        while stack:
            node = stack.pop()
            cs = tuple(kids.get(node, ()))
            if cs:
                children[node] = cs
            for c in cs:
                parent[c] = node
                depth[c] = depth[node] + 1
                stack.append(c)
        reached.update(depth)
        forest.append(DiffusionTree(root, parent, children, depth, depth_cap))
    if len(reached) != len(order):
        raise CycleDetected(set(order) - reached)
    return forest


def height_histogram(forest: Iterable[DiffusionTree]) -> dict[int, int]:
    return dict(sorted(Counter(t.height for t in forest).items()))


_COMBINE = {
    (Polarity.POSITIVE, Polarity.POSITIVE): Polarity.POSITIVE,
    (Polarity.POSITIVE, Polarity.NEGATIVE): Polarity.NEGATIVE,
    (Polarity.NEGATIVE, Polarity.POSITIVE): Polarity.NEGATIVE,
    (Polarity.NEGATIVE, Polarity.NEGATIVE): Polarity.NEGATIVE,
}


def combine(leaf: Polarity, comparison: Polarity) -> Polarity:
    """Agreement keeps the shared label, polar disagreement is Negative, Neutral is the identity."""
    if leaf == Polarity.NEUTRAL:
        return comparison
    if comparison == Polarity.NEUTRAL:
        return leaf
    return _COMBINE[(leaf, comparison)]


def vote(labels: Iterable[Polarity]) -> Polarity:
    """Plurality label; a tie for the top count (or no votes) gives Neutral."""
    counts = Counter(labels).most_common()
    if not counts or (len(counts) > 1 and counts[0][1] == counts[1][1]):
        return Polarity.NEUTRAL
    return counts[0][0]


@dataclass(frozen=True)
class Contribution:
    leaf: str
    leaf_label: Polarity
    comparison: str
    comparison_label: Polarity
    result: Polarity


@dataclass(frozen=True)
class NodeTrace:
    rule: str
    contributions: tuple = ()


@dataclass
class PropagationResult:
    propagated: dict = field(default_factory=dict)
    trace: dict = field(default_factory=dict)

    def __getitem__(self, node):
        return self.propagated[node]


def _truncated_leaves(tree: DiffusionTree, node: str, pattern_height: int):
    """(leaf, top child on its path, subtree height) for the truncated subtree under ``node``."""
    found = []
    height = 0
    for top in tree.capped_children(node):
        stack = [(top, 1)]
        while stack:
            cur, dist = stack.pop()
            height = max(height, dist)
            kids = tree.capped_children(cur)
            if not kids or dist == pattern_height:
                found.append((cur, top))
            else:
                stack.extend((k, dist + 1) for k in reversed(kids))
    return found, height


def propagate(tree: DiffusionTree, base: Mapping[str, Polarity],
              pattern_height: int = DEFAULT_PATTERN_HEIGHT) -> PropagationResult:
    if pattern_height < 1:
        raise ValueError("pattern_height must be >= 1")
    result = PropagationResult()
    for node in tree.depth:
        if tree.within_cap(node) and node not in base:
            raise MissingBaseLabel(node)

    for node in sorted(tree.depth, key=lambda n: -tree.depth[n]):
        if not tree.within_cap(node):
            result.propagated[node] = base.get(node, Polarity.NEUTRAL)
            result.trace[node] = NodeTrace("beyond-cap")
            continue
        kids = tree.capped_children(node)
        if not kids:
            result.propagated[node] = base[node]
            result.trace[node] = NodeTrace("leaf")
            continue
        leaves, height = _truncated_leaves(tree, node, pattern_height)
        if height == 1:
            contribs = tuple(Contribution(k, base[k], k, base[k], base[k]) for k in kids)
            if len(kids) == 1:
                label, rule = base[kids[0]], "height-1 transfer"
            else:
                label, rule = vote(c.result for c in contribs), "height-1 vote"
        else:
            contribs = tuple(
                Contribution(leaf, base[leaf], top, base[top], combine(base[leaf], base[top]))
                for leaf, top in leaves
            )
            label, rule = vote(c.result for c in contribs), f"height-{height} pattern"
        result.propagated[node] = label
        result.trace[node] = NodeTrace(rule, contribs)
    return result


def propagate_forest(forest: Sequence[DiffusionTree], base: Mapping[str, Polarity],
                     pattern_height: int = DEFAULT_PATTERN_HEIGHT) -> PropagationResult:
    merged = PropagationResult()
    for tree in forest:
        r = propagate(tree, base, pattern_height)
        merged.propagated.update(r.propagated)
        merged.trace.update(r.trace)
    return merged


def tree_to_dict(tree: DiffusionTree, base: Mapping[str, Polarity] = None,
                 result: Optional[PropagationResult] = None) -> dict:
    base = base or {}
    nodes = []
    for node in sorted(tree.depth, key=lambda n: (tree.depth[n], n)):
        b = base.get(node)
        nodes.append({
            "id": node,
            "parent": tree.parent.get(node),
            "depth": tree.depth[node],
            "base": b.title if b is not None else None,
            "propagated": result.propagated[node].title if result else None,
            "rule": result.trace[node].rule if result else None,
        })
    return {"root": tree.root, "depth_cap": tree.depth_cap, "nodes": nodes}


def dump_forest_json(forest, base=None, result=None) -> str:
    return json.dumps([tree_to_dict(t, base, result) for t in forest], indent=2, sort_keys=True)
