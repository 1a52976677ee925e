import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emotree.corpus import (Corpus, DuplicateId, FamousMember, MalformedRow, Message, MissingColumn, Polarity,
                            UserProfile, dangling_parents, load_corpus, load_famous, load_messages,
                            load_profiles, parse_count, read_corpus, write_corpus)


def test_sample_messages(tables_dir):
    msgs = load_messages(tables_dir / "messages.csv")
    assert [m.id for m in msgs] == ["optus", "mubazieric", "Juditho65763855", "pearlyB57", "waitingOnBiden"]
    root = msgs[0]
    assert root.retweet_of is None and root.gold_label == Polarity.POSITIVE
    assert root.text.endswith("America is coming back.")
    build = msgs[3]
    assert build.text == "Build Back Better!"
    assert build.retweet_of == "optus" and build.gold_label == Polarity.NEGATIVE


def test_empty_data_section(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("Tweet_ID,Text,Retweet_ID,Label\n")
    assert load_messages(p) == []


def test_header_is_case_insensitive(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("tweet_id,TEXT,retweet_ID,label\na,hi,,POSITIVE\nb,yo,NULL,neutral\n")
    msgs = load_messages(p)
    assert [m.gold_label for m in msgs] == [Polarity.POSITIVE, Polarity.NEUTRAL]
    assert msgs[1].retweet_of is None


def test_missing_column(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("Tweet_ID,Text,Label\na,hi,positive\n")
    with pytest.raises(MissingColumn, match="Retweet_ID"):
        load_messages(p)


def test_duplicate_id_reports_rows(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("Tweet_ID,Text,Retweet_ID,Label\na,x,,positive\nb,y,a,negative\na,z,,neutral\n")
    with pytest.raises(DuplicateId, match=r":4: .*row 2"):
        load_messages(p)


def test_bad_label_is_malformed(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("Tweet_ID,Text,Retweet_ID,Label\na,x,,happy\n")
    with pytest.raises(MalformedRow, match=":2:"):
        load_messages(p)


def test_dangling_parent_is_a_warning(tmp_path, caplog):
    p = tmp_path / "m.csv"
    p.write_text("Tweet_ID,Text,Retweet_ID,Label\na,x,ghost,positive\nb,y,a,negative\n")
    with caplog.at_level(logging.WARNING):
        msgs = load_messages(p)
    assert len(msgs) == 2
    assert "ghost" in caplog.text and ":2:" in caplog.text
    assert dangling_parents(msgs) == {"ghost"}


def test_profiles_and_famous(tables_dir):
    profiles = {p.id: p for p in load_profiles(tables_dir / "profiles.csv")}
    potus = profiles["POTUS"]
    assert potus.display_name == "President Biden"
    assert potus.bio.startswith("46th President")
    assert potus.location == "United states"
    assert profiles["Juditho65763855"].location is None
    assert profiles["waitingOnBiden"].location == "Washington, DC"
    famous = load_famous(tables_dir / "famous.csv")
    assert famous[0] == FamousMember("Barack Obama", "BarackObama", 110890048, "Politician")
    assert famous[3].activity == "Musician and Businesswomen"


def test_follower_count_grouping():
    assert parse_count("11,08,90,048") == 110890048
    assert parse_count("1,000") == 1000
    assert parse_count("") == 0
    with pytest.raises(ValueError):
        parse_count("-5")


def test_edges_split_into_follows_and_followers(tables_dir):
    corpus = load_corpus(tables_dir / "messages.csv", tables_dir / "profiles.csv", tables_dir / "famous.csv",
                         tables_dir / "edges.csv")
    prof = corpus.profile_map()
    assert prof["mubazieric"].follows == {"BarackObama"}
    assert prof["mubazieric"].followers == {"Juditho65763855", "pearlyB57"}
    assert prof["pearlyB57"].follows == {"Katyperry"}
    assert corpus.dangling == frozenset()


def test_message_invariants():
    with pytest.raises(ValueError):
        Message("", "x")
    with pytest.raises(ValueError):
        Message("a", "x", "a")
    assert Message("a", "x").user == "a"
    assert Message("a", "x", author="bob").user == "bob"


def test_polarity_parse():
    assert Polarity.parse(" Negative ") == Polarity.NEGATIVE
    assert Polarity.parse("pos") == Polarity.POSITIVE
    assert Polarity.parse("0") == Polarity.NEUTRAL
    with pytest.raises(ValueError):
        Polarity.parse("meh")
    assert Polarity.NEGATIVE < Polarity.NEUTRAL < Polarity.POSITIVE


_ids = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789_", min_size=1, max_size=8)
_texts = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc")), max_size=40)


@st.composite
def corpora(draw):
    ids = draw(st.lists(_ids, min_size=0, max_size=8, unique=True))
    msgs = []
    for i, mid in enumerate(ids):
        parent = draw(st.one_of(st.none(), st.sampled_from(ids[:i]))) if i else None
        label = draw(st.one_of(st.none(), st.sampled_from(list(Polarity))))
        msgs.append(Message(mid, draw(_texts), parent, label))
    handles = draw(st.lists(_ids.map(lambda s: "f_" + s), max_size=3, unique=True))
    famous = tuple(FamousMember(f"Name {h}", h, draw(st.integers(0, 10**9)), "Musician") for h in handles)
    profiles = []
    for uid in ids:
        follows = frozenset(draw(st.lists(st.sampled_from(handles), unique=True))) if handles else frozenset()
        others = [u for u in ids if u != uid]
        followers = frozenset(draw(st.lists(st.sampled_from(others), unique=True))) if others else frozenset()
        loc = draw(st.one_of(st.none(), st.sampled_from(["Ohio", "Washington, DC"])))
        profiles.append(UserProfile(uid, f"User {uid}", draw(_texts), loc, follows, followers))
    wiki = {h: draw(_texts) for h in handles}
    return Corpus(tuple(msgs), famous, tuple(profiles), frozenset(), wiki)


@settings(max_examples=40, deadline=None)
@given(corpora())
def test_write_then_read_round_trip(tmp_path_factory, corpus):
    d = tmp_path_factory.mktemp("rt")
    write_corpus(d, corpus)
    back = read_corpus(d)
    assert len(back.messages) == len(corpus.messages)
    assert back.messages == corpus.messages
    assert back.famous == corpus.famous
    assert back.profiles == corpus.profiles
    assert back.wiki == corpus.wiki
    ids = {m.id for m in back.messages}
    parents = {m.retweet_of for m in back.messages if m.retweet_of}
    assert parents == (parents & ids) | back.dangling
