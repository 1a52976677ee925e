"""Synthetic retweet corpora with known ground truth.

World model
-----------
Users belong to one of two communities. Community ``c`` follows famous
accounts about planted topic ``c`` (plus a stray follow of a neutral topic)
and is mostly followed by members of its own follower pool.

Each cascade has a root author and a stance (Positive or Negative). A
retweeter from the root's community echoes the stance. An outsider
reshares neutrally. A leaf with a polar label is sarcastic with probability
``sarcasm_rate``, so its words carry the opposite polarity. The text alone
then misleads, while the author's community still tells the truth.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus, FamousMember, Message, Polarity, UserProfile, write_corpus

POSITIVE_WORDS = ("good", "great", "happy", "love", "win", "proud", "hope", "excellent", "wonderful",
                  "grateful", "best", "success", "celebrate", "beautiful", "joy")
NEGATIVE_WORDS = ("bad", "terrible", "sad", "hate", "fail", "angry", "awful", "worst", "disaster",
                  "corrupt", "weak", "lie", "shame", "disgusting", "wrong")
FILLER_WORDS = ("election", "vote", "president", "debate", "ballot", "campaign", "policy", "senate",
                "rally", "speech", "today", "country", "people", "state", "news", "week", "city")
TOPIC_WORDS = (
    ("democrat", "healthcare", "climate", "union", "equality", "medicare", "progressive", "justice",
     "immigration", "labor", "vaccine", "mask", "science", "green", "renewable"),
    ("republican", "tax", "border", "freedom", "gun", "liberty", "military", "conservative",
     "constitution", "patriot", "church", "family", "oil", "farm", "business"),
    ("music", "album", "concert", "tour", "song", "guitar", "singer", "stage", "fans", "melody",
     "rhythm", "band", "studio", "lyrics", "dance"),
    ("football", "goal", "match", "league", "coach", "stadium", "player", "season", "team", "score",
     "training", "trophy", "basketball", "tennis", "athlete"),
)
TOPIC_ACTIVITY = ("Politician", "Commentator", "Musician", "Athlete")
LOCATIONS = (("New York", "California", "Washington, DC"), ("Texas", "Florida", "Ohio"))
DEFAULT_HEIGHTS = {1: 0.05, 2: 0.1, 3: 0.15, 4: 0.35, 5: 0.35}


@dataclass(frozen=True)
class SynthConfig:
    n_trees: int = 135
    branch_prob: float = 0.45
    branch_mean: float = 2.2
    heights: dict = field(default_factory=lambda: dict(DEFAULT_HEIGHTS))
    sarcasm_rate: float = 0.3
    homophily: float = 0.9
    famous_per_topic: int = 6
    follows_per_user: int = 4
    followers_per_user: int = 12
    follower_pool: int = 60
    wiki_tokens: int = 30
    seed: int = 42


@dataclass
class SynthCorpus:
    corpus: Corpus
    community: dict
    sarcastic: frozenset
    stance: dict

    def write(self, directory) -> dict:
        return write_corpus(directory, self.corpus)


def _grow_tree(rng, cfg: SynthConfig, height: int):
    """Parent list (index 0 is the root) with a spine guaranteeing ``height``."""
    parents = [-1]
    depth = [0]
    frontier = [(0, True)]
    while frontier:
        node, on_spine = frontier.pop(0)
        d = depth[node]
        if d >= height:
            continue
        n_side = int(rng.poisson(cfg.branch_mean)) if rng.random() < cfg.branch_prob else 0
        kids = [(True, on_spine)] if on_spine else []
        kids += [(False, False)] * n_side
        for _, spine in kids:
            parents.append(node)
            depth.append(d + 1)
            frontier.append((len(parents) - 1, spine))
    return parents


def _text(rng, label: Polarity) -> str:
    fill = list(rng.choice(FILLER_WORDS, size=3, replace=False))
    if label == Polarity.NEUTRAL:
        words = fill + [str(rng.choice(FILLER_WORDS))]
    else:
        pool = POSITIVE_WORDS if label == Polarity.POSITIVE else NEGATIVE_WORDS
        words = fill + list(rng.choice(pool, size=2, replace=False))
    rng.shuffle(words)
    return " ".join(words).capitalize() + "!"


def _opposite(label: Polarity) -> Polarity:
    return {Polarity.POSITIVE: Polarity.NEGATIVE, Polarity.NEGATIVE: Polarity.POSITIVE}.get(label, label)


def generate(cfg: SynthConfig = SynthConfig()) -> SynthCorpus:
    rng = np.random.default_rng(cfg.seed)
    heights = sorted(cfg.heights)
    weights = np.array([cfg.heights[h] for h in heights], dtype=float)
    weights /= weights.sum()

    famous = []
    wiki = {}
    famous_by_topic = []
    for t, words in enumerate(TOPIC_WORDS):
        handles = []
        for i in range(cfg.famous_per_topic):
            handle = f"famous_t{t}_{i}"
            handles.append(handle)
            famous.append(FamousMember(f"Famous {t}-{i}", handle, int(rng.integers(10**6, 10**8)), TOPIC_ACTIVITY[t]))
            wiki[handle] = " ".join(rng.choice(words, size=cfg.wiki_tokens))
        famous_by_topic.append(handles)

    messages, profiles = [], []
    community, stance, sarcastic = {}, {}, set()
    pools = [[f"fan{c}_{i:03d}" for i in range(cfg.follower_pool)] for c in range(2)]

    def new_user(uid, comm):
        community[uid] = comm
        own = list(rng.choice(famous_by_topic[comm], size=min(cfg.follows_per_user - 1, cfg.famous_per_topic), replace=False))
        stray = str(rng.choice(famous_by_topic[2 + int(rng.integers(2))]))
        n_own = int(rng.binomial(cfg.followers_per_user, 0.9))
        followers = set(rng.choice(pools[comm], size=n_own, replace=False))
        followers |= set(rng.choice(pools[1 - comm], size=cfg.followers_per_user - n_own, replace=False))
        profiles.append(UserProfile(uid, f"User {uid}", _text(rng, Polarity.NEUTRAL),
                                    str(rng.choice(LOCATIONS[comm])), frozenset(own + [stray]), frozenset(followers)))

    n = 0
    for tree_no in range(cfg.n_trees):
        height = int(rng.choice(heights, p=weights))
        parents = _grow_tree(rng, cfg, height)
        ids = [f"u{n + i:05d}" for i in range(len(parents))]
        n += len(parents)
        root_comm = int(rng.integers(2))
        s = Polarity.POSITIVE if rng.random() < 0.5 else Polarity.NEGATIVE
        stance[ids[0]] = s
        has_kids = {p for p in parents if p >= 0}
        for i, p in enumerate(parents):
            comm = root_comm if i == 0 or rng.random() < cfg.homophily else 1 - root_comm
            new_user(ids[i], comm)
            truth = s if comm == root_comm else Polarity.NEUTRAL
            surface = truth
            if i not in has_kids and i > 0 and truth != Polarity.NEUTRAL and rng.random() < cfg.sarcasm_rate:
                surface = _opposite(truth)
                sarcastic.add(ids[i])
            messages.append(Message(ids[i], _text(rng, surface), ids[p] if p >= 0 else None, truth))

    corpus = Corpus(tuple(messages), tuple(famous), tuple(profiles), frozenset(), wiki)
    return SynthCorpus(corpus, community, frozenset(sarcastic), stance)


def synth(cfg: SynthConfig, directory) -> dict:
    """Generate a corpus and write its CSV files under ``directory``."""
    out = generate(cfg)
    paths = out.write(Path(directory))
    return {k: str(v) for k, v in paths.items()}
