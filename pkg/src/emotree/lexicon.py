"""SentiWordNet-style lexicon and lexicon-based message scoring."""
from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Protocol, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import Message, Polarity
from .preprocess import EMO_NEG, EMO_POS, NOT_PREFIX, stem

EMOTICON_WEIGHT = 0.5
DEFAULT_THRESHOLD = 0.05


class MalformedLine(ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


@dataclass(frozen=True)
class LexiconEntry:
    term: str
    pos_score: float
    neg_score: float

    @property
    def polarity(self) -> float:
        return self.pos_score - self.neg_score


@dataclass(frozen=True)
class SentimentLexicon:
    """Surface-term and stem tables of averaged (pos, neg) scores.

    Lookup is total: unknown terms score (0, 0).
    """

    entries: Mapping[str, LexiconEntry] = field(default_factory=dict)
    stems: Mapping[str, LexiconEntry] = field(default_factory=dict)

    def lookup(self, term: str) -> LexiconEntry:
        entry = self.entries.get(term)
        if entry is None:
            entry = self.stems.get(stem(term))
        return entry if entry is not None else LexiconEntry(term, 0.0, 0.0)

    def polarity(self, term: str) -> float:
        return self.lookup(term).polarity

    def __len__(self):
        return len(self.entries)

    @classmethod
    def from_scores(cls, scores: Mapping[str, tuple]) -> "SentimentLexicon":
        """Build from {term: (pos, neg)}; the stem table averages terms sharing a stem."""
        entries = {}
        by_stem = defaultdict(list)
        for term, (pos, neg) in scores.items():
            _check_scores(pos, neg, 0)
            entries[term] = LexiconEntry(term, float(pos), float(neg))
            by_stem[stem(term)].append((pos, neg))
        stems = {s: LexiconEntry(s, float(np.mean([p for p, _ in v])), float(np.mean([n for _, n in v])))
                 for s, v in by_stem.items()}
        return cls(entries, stems)


def _check_scores(pos, neg, line_no):
    if not (0.0 <= pos <= 1.0 and 0.0 <= neg <= 1.0):
        raise MalformedLine(line_no, f"scores outside [0, 1]: pos={pos}, neg={neg}")
    if pos + neg > 1.0 + 1e-9:
        raise MalformedLine(line_no, f"pos + neg exceeds 1: {pos} + {neg}")


def load_sentiwordnet(path=None) -> SentimentLexicon:
    """Parse a SentiWordNet 3.0 text file.

    Columns are ``POS ID PosScore NegScore SynsetTerms Gloss`` separated by
    tabs; ``#`` lines are comments. A term listed in several synsets gets the
    mean of its rows. With ``path=None`` the bundled miniature lexicon is used.
    """
    if path is None:
        text = resources.files("emotree").joinpath("data/sentiwordnet_mini.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")

    term_rows = defaultdict(list)
    stem_rows = defaultdict(list)
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 5:
            raise MalformedLine(line_no, f"expected at least 5 tab-separated fields, got {len(fields)}")
        try:
            pos, neg = float(fields[2]), float(fields[3])
        except ValueError:
            raise MalformedLine(line_no, f"non-numeric scores {fields[2]!r}, {fields[3]!r}") from None
        _check_scores(pos, neg, line_no)
        terms = {t.rsplit("#", 1)[0].lower() for t in fields[4].split() if t}
        if not terms:
            raise MalformedLine(line_no, "empty SynsetTerms")
        for term in terms:
            term_rows[term].append((pos, neg))
        for s in {stem(t) for t in terms}:
            stem_rows[s].append((pos, neg))

    def average(key, rows):
        arr = np.asarray(rows, dtype=float)
        return LexiconEntry(key, float(arr[:, 0].mean()), float(arr[:, 1].mean()))

    return SentimentLexicon(
        {t: average(t, r) for t, r in term_rows.items()},
        {s: average(s, r) for s, r in stem_rows.items()},
    )


@dataclass(frozen=True)
class BaseLabel:
    message_id: str
    score: float
    label: Polarity


def label_from_score(score: float, threshold: float = DEFAULT_THRESHOLD) -> Polarity:
    if score > threshold:
        return Polarity.POSITIVE
    if score < -threshold:
        return Polarity.NEGATIVE
    return Polarity.NEUTRAL


def token_contribution(token: str, lex: SentimentLexicon) -> float:
    if token == EMO_POS:
        return EMOTICON_WEIGHT
    if token == EMO_NEG:
        return -EMOTICON_WEIGHT
    if token.startswith(NOT_PREFIX):
        return -lex.polarity(token[len(NOT_PREFIX):])
    return lex.polarity(token)


def message_score(tokens: Iterable[str], lex: SentimentLexicon) -> float:
    """Mean of the nonzero token contributions, 0.0 when there are none."""
    contributions = [c for c in (token_contribution(t, lex) for t in tokens) if c != 0.0]
    if not contributions:
        return 0.0
    return float(sum(contributions) / len(contributions))


def score_message(tokens, lex: SentimentLexicon, threshold: float = DEFAULT_THRESHOLD,
                  message_id: str = "") -> BaseLabel:
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    message_id = message_id or getattr(tokens, "source_id", "")
    score = message_score(tokens, lex)
    return BaseLabel(message_id, score, label_from_score(score, threshold))


class BaseLabeler(Protocol):
    def base_labels(self, messages: Sequence[Message], tokens: Sequence[Sequence[str]]) -> dict:
        """Return {message_id: BaseLabel} for every message."""


class LexiconScorer(BaseEstimator, TransformerMixin):
    """Lexicon scorer with a transformer face: ``transform`` gives scores, ``predict`` labels.

    Inputs are token sequences as produced by :func:`emotree.preprocess.normalize`.
    """

    def __init__(self, lexicon_path=None, threshold=DEFAULT_THRESHOLD):
        self.lexicon_path = lexicon_path
        self.threshold = threshold

    def fit(self, X=None, y=None):
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        self.lexicon_ = load_sentiwordnet(self.lexicon_path)
        return self

    @classmethod
    def from_lexicon(cls, lexicon: SentimentLexicon, threshold=DEFAULT_THRESHOLD) -> "LexiconScorer":
        scorer = cls(threshold=threshold)
        scorer.lexicon_ = lexicon
        return scorer

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "lexicon_")
        return np.array([message_score(toks, self.lexicon_) for toks in X], dtype=float)

    def predict(self, X) -> list[Polarity]:
        return [label_from_score(s, self.threshold) for s in self.transform(X)]

    def base_labels(self, messages, tokens) -> dict:
        scores = self.transform(tokens)
        return {m.id: BaseLabel(m.id, float(s), label_from_score(s, self.threshold))
                for m, s in zip(messages, scores)}


class ExternalPredictions:
    """Base labels read from ``message_id,score,label`` CSV (an outside model's output)."""

    def __init__(self, path):
        self.path = path
        self.labels: dict[str, BaseLabel] = {}
        with Path(path).open(newline="", encoding="utf-8-sig") as fh:
            reader = csv.DictReader(fh)
            fields = {f.strip().lower(): f for f in reader.fieldnames or ()}
            for col in ("message_id", "score", "label"):
                if col not in fields:
                    raise ValueError(f"{path}: missing column {col!r}")
            for row_no, row in enumerate(reader, start=2):
                mid = row[fields["message_id"]].strip()
                try:
                    score = float(row[fields["score"]])
                    label = Polarity.parse(row[fields["label"]])
                except ValueError as exc:
                    raise ValueError(f"{path}:{row_no}: {exc}") from None
                self.labels[mid] = BaseLabel(mid, score, label)

    def base_labels(self, messages, tokens=None) -> dict:
        missing = [m.id for m in messages if m.id not in self.labels]
        if missing:
            raise KeyError(f"external predictions lack {len(missing)} message(s), e.g. {missing[:3]}")
        return {m.id: self.labels[m.id] for m in messages}
