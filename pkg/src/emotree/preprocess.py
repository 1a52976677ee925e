"""Tweet text normalisation.

The pipeline runs in a fixed order:

 1. strip URLs (``http``/``https``/``www`` prefixes up to whitespace)
 2. strip @mentions
 3. drop the ``#`` of hashtags, keep the word
 4. lowercase (then the optional text hook: spell fixing, abbreviations)
 5. emoticons / emoji -> ``EMO_POS`` / ``EMO_NEG``
 6. remove punctuation and digits (clause punctuation leaves a boundary)
 7. whitespace tokenisation
 8. negation marking (``NOT_`` prefix)
 9. stopword removal
10. Porter stemming
"""
from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence

from nltk.stem.porter import PorterStemmer
from sklearn.base import BaseEstimator, TransformerMixin

EMO_POS = "EMO_POS"
EMO_NEG = "EMO_NEG"
EMO_TOKENS = frozenset({EMO_POS, EMO_NEG})
NOT_PREFIX = "NOT_"
BOUNDARY = "<clause>"

NEGATORS = frozenset({"not", "no", "never", "nor"})
CLAUSE_WORDS = frozenset({"but", "however", "although", "though", "except"})

_URL_RE = re.compile(r"(?:https?:|www\.)\S*", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_CLAUSE_PUNCT_RE = re.compile(r"[.,;:!?]+")
_CONTRACTION_RE = re.compile(r"^([a-z]+)n[’']t$")
_NON_ALPHA_RE = re.compile(r"[^a-z]+")


def load_stopwords(path=None) -> frozenset:
    """Read a stopword file: one word per line, ``#`` starts a comment."""
    if path is None:
        text = resources.files("emotree").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    words = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.add(line)
    return frozenset(words)


def load_emoji_map(path=None) -> dict:
    if path is None:
        text = resources.files("emotree").joinpath("data/emoji_map.tsv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    mapping = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            symbol, label = line.split("\t")
        except ValueError:
            raise ValueError(f"emoji map line {line_no}: expected 'symbol<TAB>label'") from None
        label = label.strip()
        if label not in EMO_TOKENS:
            raise ValueError(f"emoji map line {line_no}: label must be EMO_POS or EMO_NEG, got {label!r}")
        mapping[symbol.strip().lower()] = label
    return mapping


def _identity(text: str) -> str:
    return text


@dataclass(frozen=True)
class PreprocessConfig:
    stopwords: frozenset = field(default_factory=load_stopwords)
    emoji_map: Mapping[str, str] = field(default_factory=load_emoji_map)
    negation: bool = True
    stem: bool = True
    # spell correction / abbreviation expansion slot; runs on lowercased text
    text_hook: Callable[[str], str] = _identity

    @classmethod
    def from_files(cls, stopwords=None, emoji_map=None, **kwargs) -> "PreprocessConfig":
        return cls(stopwords=load_stopwords(stopwords), emoji_map=load_emoji_map(emoji_map), **kwargs)


@functools.lru_cache(maxsize=None)
def default_config() -> PreprocessConfig:
    return PreprocessConfig()


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple
    source_id: str = ""

    def __iter__(self):
        return iter(self.tokens)

    def __len__(self):
        return len(self.tokens)


_porter = PorterStemmer()


@functools.lru_cache(maxsize=65536)
def stem(word: str) -> str:
    """Porter stem iterated to a fixed point, so stemming a stem is a no-op."""
    for _ in range(10):
        nxt = _porter.stem(word)
        if nxt == word:
            break
        word = nxt
    return word


def _is_negator(token: str) -> bool:
    return token in NEGATORS or _CONTRACTION_RE.match(token) is not None


def mark_negation(tokens: Sequence[str]) -> list[str]:
    """Prefix every token inside a negation scope with ``NOT_``.

    A scope opens after a negator (``not``, ``no``, ``never``, ``nor`` or a
    ``n't`` contraction) and closes at a clause boundary: the ``<clause>``
    marker left by punctuation, or a contrastive word such as ``but``.
    Negators, boundaries and emoticon tokens are never prefixed.
    """
    out = []
    negated = False
    for tok in tokens:
        if tok == BOUNDARY or tok in CLAUSE_WORDS:
            negated = False
            out.append(tok)
        elif _is_negator(tok):
            negated = True
            out.append(tok)
        elif negated and tok not in EMO_TOKENS and not tok.startswith(NOT_PREFIX):
            out.append(NOT_PREFIX + tok)
        else:
            out.append(tok)
    return out


def _map_emoji(text: str, emoji_map: Mapping[str, str]) -> str:
    # emoji glyphs may touch words; ASCII emoticons only count as whole tokens
    for symbol, label in emoji_map.items():
        if not symbol.isascii() and symbol in text:
            text = text.replace(symbol, f" {label} ")
    return " ".join(emoji_map.get(tok, tok) if tok.isascii() else tok for tok in text.split())


def _clean_token(tok: str) -> list[str]:
    if tok in EMO_TOKENS:
        return [tok]
    pieces = []
    parts = _CLAUSE_PUNCT_RE.split(tok)
    for i, part in enumerate(parts):
        if i > 0:
            pieces.append(BOUNDARY)
        with_apostrophes = re.sub(r"[^a-z'’]+", "", part).replace("’", "'")
        if _CONTRACTION_RE.match(with_apostrophes):
            pieces.append(with_apostrophes)
            continue
        cleaned = _NON_ALPHA_RE.sub("", part)
        if cleaned:
            pieces.append(cleaned)
    return pieces


def _finish(tok: str, stopwords: frozenset, do_stem: bool) -> Optional[str]:
    if tok in EMO_TOKENS:
        return tok
    if tok.startswith(NOT_PREFIX):
        base = _NON_ALPHA_RE.sub("", tok[len(NOT_PREFIX):])
        if not base:
            return None
        return NOT_PREFIX + (stem(base) if do_stem else base)
    tok = tok.replace("'", "")
    if not tok or tok in stopwords:
        return None
    if do_stem:
        tok = stem(tok)
        if tok in stopwords:
            return None
    return tok


def normalize(text: str, cfg: Optional[PreprocessConfig] = None, source_id: str = "") -> TokenSeq:
    """Turn raw tweet text into a stemmed token sequence.

    >>> normalize("Build Back Better!").tokens
    ('build', 'back', 'better')
    """
    cfg = cfg or default_config()
    text = _URL_RE.sub(" ", text or "")
    text = _MENTION_RE.sub(" ", text)
    text = text.replace("#", "")
    text = cfg.text_hook(text.lower())
    text = _map_emoji(text, cfg.emoji_map)
    tokens = [piece for tok in text.split() for piece in _clean_token(tok)]
    if cfg.negation:
        tokens = mark_negation(tokens)
    out = []
    for tok in tokens:
        if tok == BOUNDARY:
            continue
        tok = _finish(tok, cfg.stopwords, cfg.stem)
        if tok is not None:
            out.append(tok)
    return TokenSeq(tuple(out), source_id)


class TextNormalizer(BaseEstimator, TransformerMixin):
    """Stateless transformer mapping an iterable of strings to token lists."""

    def __init__(self, stopwords_path=None, emoji_map_path=None, negation=True, stem=True):
        self.stopwords_path = stopwords_path
        self.emoji_map_path = emoji_map_path
        self.negation = negation
        self.stem = stem

    def fit(self, X=None, y=None):
        self.config_ = PreprocessConfig.from_files(
            self.stopwords_path, self.emoji_map_path, negation=self.negation, stem=self.stem
        )
        return self

    def transform(self, X: Iterable[str]) -> list[list[str]]:
        cfg = getattr(self, "config_", None) or self.fit().config_
        return [list(normalize(t, cfg).tokens) for t in X]
