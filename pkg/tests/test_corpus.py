import io
import json
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from tagalog.corpus import (CleanPost, RawPost, Vocab, build_corpus, clean_text, load_corpus, preprocess,
                            split, stats, write_corpus)
from tagalog.errors import DataError

GOLDEN = Path(__file__).parent / "data" / "preprocess_golden.jsonl"


def run_golden():
    """Feed the golden posts in order through one vocabulary and dedupe set."""
    vocab, seen, results = Vocab(), set(), []
    for line in GOLDEN.read_text(encoding="utf-8").splitlines():
        case = json.loads(line)
        r = case["raw"]
        raw = RawPost(r["id"], r["user_id"], r["text"], r.get("lang"), tuple(r.get("hashtags", ())))
        post = preprocess(raw, vocab, seen)
        got = None if post is None else {
            "token_text": post.token_text, "lang": post.lang,
            "tags": sorted(vocab.tag(t) for t in post.tag_indices)}
        exp = case["expected"]
        if exp is not None:
            exp = dict(exp, tags=sorted(exp["tags"]))
        results.append((r["id"], got, exp))
    return results


def test_golden_file_has_twenty_cases():
    assert len(run_golden()) == 20


@pytest.mark.parametrize("case_id,got,exp", run_golden())
def test_golden(case_id, got, exp):
    assert got == exp


def test_devanagari_marks_survive():
    text, tags = clean_text("आज का दिन #शुभ है")
    assert text == "आज का दिन है" and tags == ["शुभ"]


def test_load_corpus(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text(
        '{"id":"1","user_id":"u1","text":"hello world today","hashtags":["x"]}\n'
        '{"id":"2","user_id":"u1"}\n'
        'not json\n', encoding="utf-8")
    from tagalog.corpus import LoadReport
    report = LoadReport()
    posts = load_corpus(path, report)
    assert posts == [RawPost("1", "u1", "hello world today", None, ("x",))]
    assert report.malformed == 2


def test_load_empty_and_missing(tmp_path):
    (tmp_path / "e.jsonl").write_text("", encoding="utf-8")
    assert load_corpus(tmp_path / "e.jsonl") == []
    with pytest.raises(DataError):
        load_corpus(tmp_path / "nope.jsonl")


def test_write_load_roundtrip(tmp_path):
    posts = [RawPost("a", "u", "ज़रा सा text", "hi", ("t1", "t2")), RawPost("b", "v", "x y z", None, ())]
    write_corpus(posts, tmp_path / "c.jsonl")
    assert load_corpus(tmp_path / "c.jsonl") == posts


def _posts(n):
    return [CleanPost(f"p{i:02d}", 0, "a b c", "en", frozenset({0})) for i in range(n)]


def test_split_sizes_and_determinism():
    parts = split(_posts(10), (0.8, 0.1, 0.1), 7)
    assert tuple(map(len, parts)) == (8, 1, 1)
    assert split(_posts(10), (0.8, 0.1, 0.1), 7) == parts
    with pytest.raises(ValueError):
        split(_posts(10), (0.5, 0.5, 0.1), 7)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 80), st.integers(0, 10**6))
def test_split_is_partition(n, seed):
    posts = _posts(n)
    tr, va, te = split(posts, (0.8, 0.1, 0.1), seed)
    ids = [p.id for p in tr + va + te]
    assert sorted(ids) == [p.id for p in posts]
    assert split(list(reversed(posts)), (0.8, 0.1, 0.1), seed) == (tr, va, te)


def test_stats():
    posts = [CleanPost("1", 0, "a b c", "en", frozenset({0, 1, 2})),
             CleanPost("2", 1, "a b c", "en", frozenset({0, 1, 2, 3, 4}))]
    s = stats(posts)
    assert s.avg_tags_per_post == 4
    four = [CleanPost(str(i), i % 2, "a b c", "en", frozenset({0})) for i in range(4)]
    assert stats(four).avg_posts_per_user == 2
    buf = io.StringIO()
    s.write_csv(buf)
    assert buf.getvalue().splitlines()[0] == "metric,value"


def test_min_tag_freq_and_frozen_vocab():
    raws = [RawPost(str(i), "u", f"word{i} more words", "en", ("common",) + (("rare",) if i == 0 else ()))
            for i in range(4)]
    posts, vocab = build_corpus(raws, min_tag_freq=2)
    assert vocab.hashtags == ["common"] and len(posts) == 4
    vocab.freeze()
    new = [RawPost("x", "stranger", "some other words", "en", ("common", "unseen"))]
    posts2, _ = build_corpus(new, vocab=vocab)
    assert posts2[0].user_index == -1 and posts2[0].tag_indices == frozenset({0})
    with pytest.raises(KeyError):
        vocab.add_tag("later")


def test_vocab_json_roundtrip():
    v = Vocab(["a", "b"], ["u1"])
    assert Vocab.from_json(json.loads(json.dumps(v.to_json()))) == v
