"""End-to-end run: ingest -> preprocess -> base labels -> diffusion -> similarity
and interests -> interest groups -> fusion -> metrics report."""
from __future__ import annotations

import configparser
import csv
import dataclasses
import json
import logging
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import difftree, metrics, preprocess, similarity, topics
from . import lexicon as lex
from .boost import BoostConfig, DegenerateData
from .corpus import POLARITIES, Corpus, Polarity, UserProfile, load_corpus
from .fusion import FusionMLP

logger = logging.getLogger(__name__)

ABLATIONS = ("lexicon_only", "+diffusion", "+similarity", "+interests", "full")
FEATURE_GROUPS = {
    "+diffusion": ("lexicon", "diffusion"),
    "+similarity": ("lexicon", "diffusion", "similarity"),
    "+interests": ("lexicon", "diffusion", "interests"),
    "full": ("lexicon", "diffusion", "similarity", "interests"),
}


class StageError(RuntimeError):
    def __init__(self, stage: str, error: Exception):
        self.stage = stage
        self.error = error
        super().__init__(f"[{stage}] {type(error).__name__}: {error}")


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named stage, derived from the root seed."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode("utf-8"))])


def substream_seed(seed: int, name: str) -> int:
    return int(substream(seed, name).integers(0, 2**31 - 1))


@dataclass
class PipelineConfig:
    messages: Optional[str] = None
    profiles: Optional[str] = None
    famous: Optional[str] = None
    edges: Optional[str] = None
    wiki: Optional[str] = None
    lexicon: Optional[str] = None
    external_predictions: Optional[str] = None
    stopwords: Optional[str] = None
    emoji_map: Optional[str] = None
    negation: bool = True
    stem: bool = True
    threshold: float = lex.DEFAULT_THRESHOLD
    depth_cap: int = difftree.DEFAULT_DEPTH_CAP
    pattern_height: int = difftree.DEFAULT_PATTERN_HEIGHT
    n_topics: int = 19
    alpha: Optional[float] = None
    beta: float = 0.01
    lda_iters: int = 1000
    boost_learning_rate: float = 0.1
    boost_depth: int = 6
    boost_iterations: int = 200
    mlp_hidden: int = 16
    mlp_epochs: int = 300
    mlp_learning_rate: float = 0.05
    mlp_batch_size: int = 32
    mlp_patience: int = 20
    test_fraction: float = 0.2
    seed: int = 42
    ablations: tuple = ABLATIONS

    def __post_init__(self):
        unknown = [a for a in self.ablations if a not in ABLATIONS]
        if unknown:
            raise ValueError(f"unknown ablation(s) {unknown}; choose from {list(ABLATIONS)}")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must be in (0, 1)")

    def boost_config(self) -> BoostConfig:
        return BoostConfig(self.boost_learning_rate, self.boost_depth, self.boost_iterations,
                           substream_seed(self.seed, "boost"))

    @classmethod
    def field_types(cls) -> dict:
        return {f.name: f.type for f in dataclasses.fields(cls)}

    @classmethod
    def from_mapping(cls, values: dict) -> "PipelineConfig":
        """Build from string values (config file / CLI); unknown keys are rejected."""
        types = cls.field_types()
        kwargs = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in types:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(types[key], raw)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path, overrides: Optional[dict] = None) -> "PipelineConfig":
        """Read ``key = value`` lines (``#`` comments, optional [section] headers)."""
        text = Path(path).read_text(encoding="utf-8")
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        parser.read_string("[pipeline]\n" + text)
        values = {}
        for section in parser.sections():
            values.update(parser[section])
        base = Path(path).parent
        for key in ("messages", "profiles", "famous", "edges", "wiki", "lexicon", "external_predictions",
                    "stopwords", "emoji_map"):
            if key in values and values[key] and not Path(values[key]).is_absolute():
                values[key] = str(base / values[key])
        values.update(overrides or {})
        return cls.from_mapping(values)


def _coerce(type_name, raw):
    if not isinstance(raw, str):
        return raw
    t = str(type_name)
    if raw.strip().lower() in ("none", "null", "") and "Optional" in t:
        return None
    if "bool" in t:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if "int" in t and "Optional" not in t:
        return int(raw)
    if "float" in t:
        return float(raw)
    if "tuple" in t:
        return tuple(a.strip() for a in raw.split(",") if a.strip())
    return raw


@dataclass
class PipelineState:
    """Intermediate artefacts of one run, exposed for inspection and dumping."""

    corpus: Corpus
    tokens: dict = field(default_factory=dict)
    base: dict = field(default_factory=dict)
    forest: list = field(default_factory=list)
    propagation: Optional[difftree.PropagationResult] = None
    root_of: dict = field(default_factory=dict)
    similarity: dict = field(default_factory=dict)
    shared: dict = field(default_factory=dict)
    lda: Optional[topics.GibbsLDA] = None
    interests: dict = field(default_factory=dict)
    booster: object = None
    groups: dict = field(default_factory=dict)
    features: dict = field(default_factory=dict)
    train_ids: list = field(default_factory=list)
    test_ids: list = field(default_factory=list)
    models: dict = field(default_factory=dict)
    predictions: dict = field(default_factory=dict)


def _stage(name):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except StageError:
                raise
            except (FloatingPointError, ArithmeticError) as exc:
                raise StageError(name, exc) from exc
            except (ValueError, KeyError, OSError) as exc:
                raise StageError(name, exc) from exc
        inner.__name__ = fn.__name__
        return inner
    return wrap


@_stage("ingest")
def ingest(cfg: PipelineConfig) -> Corpus:
    if not cfg.messages:
        raise ValueError("no messages file configured")
    return load_corpus(cfg.messages, cfg.profiles, cfg.famous, cfg.edges, cfg.wiki)


@_stage("preprocess")
def _preprocess(cfg, state):
    pcfg = preprocess.PreprocessConfig.from_files(cfg.stopwords, cfg.emoji_map, negation=cfg.negation, stem=cfg.stem)
    state.tokens = {m.id: preprocess.normalize(m.text, pcfg, m.id) for m in state.corpus.messages}
    return pcfg


@_stage("base-labels")
def _base_labels(cfg, state):
    msgs = state.corpus.messages
    if cfg.external_predictions:
        labeler = lex.ExternalPredictions(cfg.external_predictions)
    else:
        labeler = lex.LexiconScorer(cfg.lexicon, cfg.threshold).fit()
    state.base = labeler.base_labels(msgs, [state.tokens[m.id].tokens for m in msgs])


@_stage("diffusion")
def _diffusion(cfg, state):
    state.forest = difftree.build_forest(state.corpus.messages, cfg.depth_cap)
    labels = {k: v.label for k, v in state.base.items()}
    state.propagation = difftree.propagate_forest(state.forest, labels, cfg.pattern_height)
    for tree in state.forest:
        for node in tree.nodes:
            state.root_of[node] = tree.root


def _profiles_for_authors(corpus: Corpus) -> dict:
    profiles = corpus.profile_map()
    missing = sorted({m.user for m in corpus.messages} - set(profiles))
    if missing:
        logger.warning("%d message author(s) have no profile; using empty profiles (e.g. %s)",
                       len(missing), missing[:3])
        for uid in missing:
            profiles[uid] = UserProfile(uid)
    return profiles


@_stage("similarity")
def _similarity(cfg, state):
    profiles = _profiles_for_authors(state.corpus)
    user_of = {m.id: m.user for m in state.corpus.messages}
    for tree in state.forest:
        state.similarity.update(similarity.node_similarity_to_root(tree, user_of, profiles))
        state.shared.update(similarity.node_similarity_to_root(tree, user_of, profiles, raw=True))
    return profiles


@_stage("topics")
def _topics(cfg, state, pcfg, profiles):
    famous = sorted(state.corpus.famous, key=lambda f: f.handle)
    K = cfg.n_topics
    if famous:
        docs = [preprocess.normalize(topics.influencer_document(f, profiles.get(f.handle), state.corpus.wiki.get(f.handle)),
                                     pcfg, f.handle).tokens for f in famous]
    if famous and any(docs):
        state.lda = topics.GibbsLDA(n_topics=K, alpha=cfg.alpha, beta=cfg.beta, n_iter=cfg.lda_iters,
                                    random_state=substream_seed(cfg.seed, "lda")).fit(docs)
        famous_thetas = {f.handle: state.lda.doc_topic_[i] for i, f in enumerate(famous)}
    else:
        logger.warning("no influencer documents; every user gets a uniform interest vector")
        famous_thetas = {}
    for uid in sorted({m.user for m in state.corpus.messages}):
        state.interests[uid] = topics.user_interest(profiles[uid], famous_thetas, K).theta


@_stage("boost")
def _boost(cfg, state, profiles, train_users):
    users = sorted(state.interests)
    user_sim: dict = {}
    for m in state.corpus.messages:
        user_sim.setdefault(m.user, []).append(state.similarity.get(m.id, 0.0))
    rows = []
    for uid in users:
        p = profiles[uid]
        rows.append(list(state.interests[uid]) + [np.log1p(len(p.followers)), np.log1p(len(p.follows)),
                                                  float(np.mean(user_sim.get(uid, [0.0]))), p.location or "unknown"])
    X = np.array(rows, dtype=object)
    target = np.array([int(np.argmax(state.interests[u])) for u in users])
    train = np.array([u in train_users for u in users])
    cat_col = X.shape[1] - 1
    try:
        state.booster = cfg.boost_config().estimator(cat_features=(cat_col,)).fit(X[train], target[train])
        pred = state.booster.predict(X)
    except DegenerateData:
        logger.warning("interest groups degenerate on the training users; using argmax topic directly")
        pred = target
    state.groups = {u: int(g) for u, g in zip(users, pred)}


def _one_hot(label: Polarity) -> list:
    return [1.0 if label == p else 0.0 for p in POLARITIES]


def feature_blocks(state: PipelineState, mid: str) -> dict:
    """Fusion features of one message, grouped by channel.

    lexicon: score + one-hot label; diffusion: one-hot propagated label of the
    message's cascade root; similarity: follower similarity to the root path;
    interests: author topic mixture + same-interest-group-as-root indicator.
    """
    msg_user = state.features["_user"][mid]
    root = state.root_of[mid]
    root_user = state.features["_user"][root]
    b = state.base[mid]
    return {
        "lexicon": [b.score] + _one_hot(b.label),
        "diffusion": _one_hot(state.propagation.propagated[root]),
        "similarity": [state.similarity.get(mid, 0.0)],
        "interests": list(state.interests[msg_user])
                     + [1.0 if state.groups.get(msg_user) == state.groups.get(root_user) else 0.0],
    }


def feature_matrix(state: PipelineState, ids, groups) -> np.ndarray:
    rows = []
    for mid in ids:
        blocks = feature_blocks(state, mid)
        rows.append([v for g in groups for v in blocks[g]])
    return np.array(rows, dtype=float)


def split_ids(ids, test_fraction: float, seed: int):
    ids = sorted(ids)
    perm = substream(seed, "split").permutation(len(ids))
    n_test = max(1, int(round(len(ids) * test_fraction))) if len(ids) > 1 else 0
    test = sorted(ids[i] for i in perm[:n_test])
    train = sorted(ids[i] for i in perm[n_test:])
    return train, test


def build_state(cfg: PipelineConfig, corpus: Optional[Corpus] = None) -> PipelineState:
    corpus = corpus if corpus is not None else ingest(cfg)
    state = PipelineState(corpus)
    pcfg = _preprocess(cfg, state)
    _base_labels(cfg, state)
    _diffusion(cfg, state)
    profiles = _similarity(cfg, state)
    _topics(cfg, state, pcfg, profiles)
    gold_ids = [m.id for m in corpus.messages if m.gold_label is not None]
    state.train_ids, state.test_ids = split_ids(gold_ids, cfg.test_fraction, cfg.seed)
    by_id = {m.id: m for m in corpus.messages}
    _boost(cfg, state, profiles, {by_id[i].user for i in state.train_ids})
    state.features["_user"] = {m.id: m.user for m in corpus.messages}
    return state


@_stage("fusion")
def _fusion(cfg, state, name):
    groups = FEATURE_GROUPS[name]
    gold = {m.id: m.gold_label for m in state.corpus.messages}
    Xtr = feature_matrix(state, state.train_ids, groups)
    ytr = np.array([int(gold[i]) for i in state.train_ids])
    model = FusionMLP(n_hidden=cfg.mlp_hidden, learning_rate=cfg.mlp_learning_rate, epochs=cfg.mlp_epochs,
                      batch_size=cfg.mlp_batch_size, patience=cfg.mlp_patience,
                      random_state=substream_seed(cfg.seed, f"mlp:{name}"))
    model.fit(Xtr, ytr)
    state.models[name] = model
    pred = model.predict(feature_matrix(state, state.test_ids, groups))
    return [Polarity(int(p)) for p in pred]


def run(cfg: PipelineConfig, corpus: Optional[Corpus] = None, dump_dir=None,
        state: Optional[PipelineState] = None) -> metrics.Report:
    state = state or build_state(cfg, corpus)
    if not state.test_ids:
        raise StageError("split", ValueError("no gold-labelled messages to evaluate"))
    gold = {m.id: m.gold_label for m in state.corpus.messages}
    y_test = [gold[i] for i in state.test_ids]
    results = {}
    for name in cfg.ablations:
        if name == "lexicon_only":
            pred = [state.base[i].label for i in state.test_ids]
        else:
            pred = _fusion(cfg, state, name)
        state.predictions[name] = dict(zip(state.test_ids, pred))
        results[name] = metrics.evaluate(y_test, pred)
    baseline = "lexicon_only" if "lexicon_only" in results else None
    notes = [f"evaluated on {len(state.test_ids)} held-out messages (seed {cfg.seed})",
             "F-measure = 2PR/(P+R) of macro precision and recall; macro_f1 = mean per-class F1"]
    rep = metrics.report(results, baseline, notes)
    if dump_dir is not None:
        dump_state(state, cfg, dump_dir, rep)
    return rep


def dump_state(state: PipelineState, cfg: PipelineConfig, directory, rep: Optional[metrics.Report] = None) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    labels = {k: v.label for k, v in state.base.items()}
    (d / "trees.json").write_text(difftree.dump_forest_json(state.forest, labels, state.propagation), encoding="utf-8")
    with (d / "base_labels.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["message_id", "score", "label"])
        for mid in sorted(state.base):
            w.writerow([mid, f"{state.base[mid].score:.10g}", state.base[mid].label.name.lower()])
    profiles = _profiles_for_authors(state.corpus)
    user_of = {m.id: m.user for m in state.corpus.messages}
    with (d / "similarity.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_a", "user_b", "jaccard", "shared_count"])
        seen = set()
        for tree in state.forest:
            for node in sorted(tree.nodes):
                for anc in tree.path_to_root(node):
                    a, b = sorted((user_of[node], user_of[anc]))
                    if (a, b) in seen or a == b:
                        continue
                    seen.add((a, b))
                    pa, pb = profiles[a], profiles[b]
                    w.writerow([a, b, f"{similarity.pair_similarity(pa, pb):.10g}", similarity.shared_count(pa, pb)])
    if state.lda is not None:
        dump = state.lda.to_dict()
        dump["topics"] = topics.topic_report(state.lda)
        (d / "topics.json").write_text(json.dumps(dump, sort_keys=True), encoding="utf-8")
    if state.booster is not None:
        (d / "boost.json").write_text(state.booster.to_json(), encoding="utf-8")
    with (d / "features.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        K = cfg.n_topics
        w.writerow(["message_id", "split", "lex_score", "lex_neg", "lex_neu", "lex_pos", "diff_neg", "diff_neu",
                    "diff_pos", "sim_to_root"] + [f"theta_{k}" for k in range(K)] + ["same_group_as_root", "gold"])
        split = {i: "train" for i in state.train_ids} | {i: "test" for i in state.test_ids}
        gold = {m.id: m.gold_label for m in state.corpus.messages}
        for m in state.corpus.messages:
            row = feature_matrix(state, [m.id], FEATURE_GROUPS["full"])[0]
            g = gold[m.id]
            w.writerow([m.id, split.get(m.id, "")] + [f"{v:.10g}" for v in row] + [g.name.lower() if g is not None else ""])
    for name, model in sorted(state.models.items()):
        safe = name.replace("+", "plus_")
        (d / f"mlp_{safe}.json").write_text(model.to_json(), encoding="utf-8")
    if rep is not None:
        rep.write(d)
