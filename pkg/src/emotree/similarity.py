"""Follower-overlap similarity between users and the similarity-to-root tree feature."""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import UserProfile
from .difftree import DiffusionTree


class MissingProfile(KeyError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"no profile for tree node {node!r}")


def jaccard(a: frozenset, b: frozenset) -> float:
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def pair_similarity(a: UserProfile, b: UserProfile) -> float:
    """Jaccard coefficient of the two follower sets.

    A user compared with itself scores 1.0 even with no followers.
    """
    if a.id == b.id:
        return 1.0
    return jaccard(a.followers, b.followers)


def shared_count(a: UserProfile, b: UserProfile) -> int:
    return len(a.followers & b.followers)


@dataclass(frozen=True)
class SimilarityMatrix:
    users: tuple
    values: np.ndarray
    shared: np.ndarray

    def __getitem__(self, pair):
        i, j = (self.users.index(u) for u in pair)
        return float(self.values[i, j])

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user_a", "user_b", "jaccard", "shared_count"])
            for i, j in itertools.combinations(range(len(self.users)), 2):
                w.writerow([self.users[i], self.users[j], f"{self.values[i, j]:.10g}", int(self.shared[i, j])])


def similarity_matrix(profiles: Sequence[UserProfile]) -> SimilarityMatrix:
    profiles = sorted(profiles, key=lambda p: p.id)
    n = len(profiles)
    values = np.eye(n)
    shared = np.zeros((n, n), dtype=int)
    for i in range(n):
        shared[i, i] = len(profiles[i].followers)
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = pair_similarity(profiles[i], profiles[j])
            shared[i, j] = shared[j, i] = shared_count(profiles[i], profiles[j])
    return SimilarityMatrix(tuple(p.id for p in profiles), values, shared)


def path_similarity_to_root(tree: DiffusionTree, user_of: Mapping[str, str],
                            profiles: Mapping[str, UserProfile], raw: bool = False) -> dict:
    """Per user: mean follower overlap with every ancestor on the path to the root.

    Returns {user: value}. With ``raw=True`` the value is the mean shared
    follower count instead of the Jaccard coefficient. The root user gets 1.0
    (its own follower count when ``raw``). A user posting twice in one tree
    keeps the value of its shallowest node.
    """
    per_node = node_similarity_to_root(tree, user_of, profiles, raw)
    out = {}
    for node in sorted(per_node, key=lambda n: (tree.depth[n], n), reverse=True):
        out[user_of[node]] = per_node[node]
    return out


def node_similarity_to_root(tree: DiffusionTree, user_of: Mapping[str, str],
                            profiles: Mapping[str, UserProfile], raw: bool = False) -> dict:
    """Similarity-to-root keyed by node id.

    Nodes beyond the influence cap are skipped when their author has no profile.
    """
    out = {}
    for node in tree.depth:
        user = user_of.get(node)
        if user not in profiles:
            if tree.within_cap(node):
                raise MissingProfile(node)
            continue
        path = tree.path_to_root(node)
        me = profiles[user]
        if not path:
            out[node] = float(len(me.followers)) if raw else 1.0
            continue
        measure = shared_count if raw else pair_similarity
        vals = []
        for v in path:
            if user_of.get(v) not in profiles:
                raise MissingProfile(v)
            vals.append(measure(me, profiles[user_of[v]]))
        out[node] = float(np.mean(vals))
    return out
