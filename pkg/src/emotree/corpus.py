"""Loading, validating and writing the message / profile / famous-member datasets.

All files are UTF-8 CSV with a header row. Column names are matched
case-insensitively.

    messages.csv  Tweet_ID,Text,Retweet_ID,Label[,Author]
    famous.csv    Name,Twitter_ID,Followers,Activity
    profiles.csv  ID,Name,Bio,Location
    edges.csv     Follower_ID,Followed_ID
    wiki.csv      handle,text            (optional)
"""
from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

logger = logging.getLogger(__name__)

NULL_TOKENS = {"", "null", "none", "nan"}


class CorpusError(ValueError):
    """Base class for data errors raised while loading a dataset."""


class MissingColumn(CorpusError):
    pass


class DuplicateId(CorpusError):
    pass


class MalformedRow(CorpusError):
    pass


class Polarity(enum.IntEnum):
    """Three-valued sentiment label. The integer order breaks ties."""

    NEGATIVE = 0
    NEUTRAL = 1
    POSITIVE = 2

    @classmethod
    def parse(cls, value: str) -> "Polarity":
        key = value.strip().lower()
        for member in cls:
            if member.name.lower() == key:
                return member
        aliases = {"neg": cls.NEGATIVE, "pos": cls.POSITIVE, "neu": cls.NEUTRAL,
                   "-1": cls.NEGATIVE, "0": cls.NEUTRAL, "1": cls.POSITIVE}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown polarity label {value!r}")

    @property
    def title(self) -> str:
        return self.name.capitalize()


POLARITIES = tuple(Polarity)


@dataclass(frozen=True)
class Message:
    id: str
    text: str
    retweet_of: Optional[str] = None
    gold_label: Optional[Polarity] = None
    author: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("message id must be nonempty")
        if self.retweet_of is not None and self.retweet_of == self.id:
            raise ValueError(f"message {self.id!r} retweets itself")

    @property
    def user(self) -> str:
        # Table-style corpora use the author handle as the tweet id.
        return self.author or self.id


@dataclass(frozen=True)
class FamousMember:
    name: str
    handle: str
    followers: int
    activity: str

    def __post_init__(self):
        if self.followers < 0:
            raise ValueError(f"negative follower count for {self.handle!r}")


@dataclass(frozen=True)
class UserProfile:
    id: str
    display_name: str = ""
    bio: str = ""
    location: Optional[str] = None
    follows: frozenset = field(default_factory=frozenset)
    followers: frozenset = field(default_factory=frozenset)


@dataclass(frozen=True)
class Corpus:
    messages: tuple = ()
    famous: tuple = ()
    profiles: tuple = ()
    dangling: frozenset = field(default_factory=frozenset)
    wiki: Mapping[str, str] = field(default_factory=dict)

    def profile_map(self) -> dict:
        return {p.id: p for p in self.profiles}

    def famous_map(self) -> dict:
        return {f.handle: f for f in self.famous}


def _optional(value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    value = value.strip()
    return None if value.lower() in NULL_TOKENS else value


def parse_count(value: str) -> int:
    """Parse a follower count, treating every comma as a grouping separator.

    >>> parse_count("11,08,90,048")
    110890048
    """
    cleaned = value.strip().replace(",", "").replace("_", "").replace(" ", "")
    if not cleaned:
        return 0
    try:
        count = int(cleaned)
    except ValueError:
        count = int(float(cleaned))
    if count < 0:
        raise ValueError(f"negative count {value!r}")
    return count


def _read_rows(path, required: Sequence[str], optional: Sequence[str] = ()):
    """Yield (row_number, {canonical_column: value}) for each data row.

    Row numbers are 1-based file line numbers of the data rows (header is 1).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn(f"{path}: empty file, expected header {list(required)}")
        lookup = {h.strip().lower(): i for i, h in enumerate(header)}
        missing = [c for c in required if c.lower() not in lookup]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {missing} in header {header}")
        columns = [c for c in (*required, *optional) if c.lower() in lookup]
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            record = {}
            for col in columns:
                idx = lookup[col.lower()]
                record[col] = row[idx] if idx < len(row) else ""
            yield row_no, record


def load_messages(path) -> list[Message]:
    messages: list[Message] = []
    seen: dict[str, int] = {}
    for row_no, rec in _read_rows(path, ("Tweet_ID", "Text", "Retweet_ID", "Label"), ("Author",)):
        mid = rec["Tweet_ID"].strip()
        if not mid:
            raise MalformedRow(f"{path}:{row_no}: empty Tweet_ID")
        if mid in seen:
            raise DuplicateId(f"{path}:{row_no}: duplicate Tweet_ID {mid!r} (first seen on row {seen[mid]})")
        seen[mid] = row_no
        parent = _optional(rec["Retweet_ID"])
        if parent == mid:
            raise MalformedRow(f"{path}:{row_no}: message {mid!r} retweets itself")
        label = _optional(rec["Label"])
        try:
            gold = Polarity.parse(label) if label is not None else None
        except ValueError as exc:
            raise MalformedRow(f"{path}:{row_no}: {exc}") from None
        messages.append(Message(mid, rec["Text"], parent, gold, _optional(rec.get("Author"))))
    for mid, parent, row_no in _dangling_rows(messages, seen):
        logger.warning("%s:%d: retweet parent %r of %r not in corpus; treated as a root", path, row_no, parent, mid)
    return messages


def _dangling_rows(messages, rows):
    ids = {m.id for m in messages}
    for m in messages:
        if m.retweet_of is not None and m.retweet_of not in ids:
            yield m.id, m.retweet_of, rows.get(m.id, 0)


def dangling_parents(messages: Iterable[Message]) -> frozenset:
    """Parent ids referenced by ``retweet_of`` that are absent from the corpus."""
    messages = list(messages)
    ids = {m.id for m in messages}
    return frozenset(m.retweet_of for m in messages if m.retweet_of is not None and m.retweet_of not in ids)


def load_famous(path) -> list[FamousMember]:
    members = []
    seen: dict[str, int] = {}
    for row_no, rec in _read_rows(path, ("Name", "Twitter_ID", "Followers", "Activity")):
        handle = rec["Twitter_ID"].strip()
        if not handle:
            raise MalformedRow(f"{path}:{row_no}: empty Twitter_ID")
        if handle in seen:
            raise DuplicateId(f"{path}:{row_no}: duplicate Twitter_ID {handle!r} (first seen on row {seen[handle]})")
        seen[handle] = row_no
        try:
            followers = parse_count(rec["Followers"])
        except ValueError as exc:
            raise MalformedRow(f"{path}:{row_no}: bad follower count: {exc}") from None
        members.append(FamousMember(rec["Name"].strip(), handle, followers, rec["Activity"].strip()))
    return members


def load_edges(path) -> list[tuple[str, str]]:
    edges = []
    for row_no, rec in _read_rows(path, ("Follower_ID", "Followed_ID")):
        a, b = rec["Follower_ID"].strip(), rec["Followed_ID"].strip()
        if not a or not b:
            raise MalformedRow(f"{path}:{row_no}: empty id in edge")
        edges.append((a, b))
    return edges


def load_profiles(path, edges_path=None, famous_handles: Iterable[str] = ()) -> list[UserProfile]:
    """Load profiles; follow/follower sets come from the optional edge list.

    An edge whose Followed_ID is a famous handle lands in the follower's
    ``follows`` set, any other edge in the followed user's ``followers`` set.
    """
    rows = []
    seen: dict[str, int] = {}
    for row_no, rec in _read_rows(path, ("ID", "Name", "Bio", "Location")):
        uid = rec["ID"].strip()
        if not uid:
            raise MalformedRow(f"{path}:{row_no}: empty ID")
        if uid in seen:
            raise DuplicateId(f"{path}:{row_no}: duplicate ID {uid!r} (first seen on row {seen[uid]})")
        seen[uid] = row_no
        rows.append((uid, rec["Name"].strip(), rec["Bio"], _optional(rec["Location"])))

    follows: dict[str, set] = {}
    followers: dict[str, set] = {}
    if edges_path is not None:
        famous = set(famous_handles)
        for a, b in load_edges(edges_path):
            if b in famous:
                follows.setdefault(a, set()).add(b)
            else:
                followers.setdefault(b, set()).add(a)
    return [
        UserProfile(uid, name, bio, loc, frozenset(follows.get(uid, ())), frozenset(followers.get(uid, ())))
        for uid, name, bio, loc in rows
    ]


def load_wiki(path) -> dict[str, str]:
    return {rec["handle"].strip(): rec["text"] for _, rec in _read_rows(path, ("handle", "text"))}


def load_corpus(messages, profiles=None, famous=None, edges=None, wiki=None) -> Corpus:
    msgs = load_messages(messages)
    fam = load_famous(famous) if famous else []
    profs = load_profiles(profiles, edges, [f.handle for f in fam]) if profiles else []
    return Corpus(
        messages=tuple(msgs),
        famous=tuple(fam),
        profiles=tuple(profs),
        dangling=dangling_parents(msgs),
        wiki=load_wiki(wiki) if wiki else {},
    )


def _writer(path):
    fh = Path(path).open("w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def write_messages(path, messages: Iterable[Message], with_author: bool = False) -> None:
    fh, w = _writer(path)
    with fh:
        header = ["Tweet_ID", "Text", "Retweet_ID", "Label"] + (["Author"] if with_author else [])
        w.writerow(header)
        for m in messages:
            row = [m.id, m.text, m.retweet_of or "null", m.gold_label.name.lower() if m.gold_label is not None else ""]
            if with_author:
                row.append(m.author or "")
            w.writerow(row)


def write_famous(path, members: Iterable[FamousMember]) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(["Name", "Twitter_ID", "Followers", "Activity"])
        for f in members:
            w.writerow([f.name, f.handle, f.followers, f.activity])


def write_profiles(path, profiles: Iterable[UserProfile], edges_path=None) -> None:
    profiles = list(profiles)
    fh, w = _writer(path)
    with fh:
        w.writerow(["ID", "Name", "Bio", "Location"])
        for p in profiles:
            w.writerow([p.id, p.display_name, p.bio, p.location or "null"])
    if edges_path is not None:
        fh, w = _writer(edges_path)
        with fh:
            w.writerow(["Follower_ID", "Followed_ID"])
            for p in profiles:
                for handle in sorted(p.follows):
                    w.writerow([p.id, handle])
                for follower in sorted(p.followers):
                    w.writerow([follower, p.id])


def write_corpus(directory, corpus: Corpus) -> dict:
    """Write all datasets under ``directory``; returns {dataset: path}."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "messages": directory / "messages.csv",
        "famous": directory / "famous.csv",
        "profiles": directory / "profiles.csv",
        "edges": directory / "edges.csv",
    }
    with_author = any(m.author for m in corpus.messages)
    write_messages(paths["messages"], corpus.messages, with_author=with_author)
    write_famous(paths["famous"], corpus.famous)
    write_profiles(paths["profiles"], corpus.profiles, paths["edges"])
    if corpus.wiki:
        paths["wiki"] = directory / "wiki.csv"
        fh, w = _writer(paths["wiki"])
        with fh:
            w.writerow(["handle", "text"])
            for handle in sorted(corpus.wiki):
                w.writerow([handle, corpus.wiki[handle]])
    return paths


def read_corpus(directory) -> Corpus:
    directory = Path(directory)
    opt = lambda name: directory / name if (directory / name).exists() else None  # noqa: E731
    return load_corpus(
        directory / "messages.csv",
        profiles=opt("profiles.csv"),
        famous=opt("famous.csv"),
        edges=opt("edges.csv"),
        wiki=opt("wiki.csv"),
    )
