import pytest
from hypothesis import given, settings, strategies as st

from tagalog.corpus import build_corpus
from tagalog.errors import ConfigError
from tagalog.langid import identify_language
from tagalog.synth import SynthSpec, gen_synth


def test_acceptance_corpus_shape():
    raws = gen_synth(SynthSpec(6, 60, 7, 12, 42))
    assert len(raws) == 60 and len({r.user_id for r in raws}) == 6
    assert len({r.lang for r in raws}) <= 7
    posts, _ = build_corpus(raws)
    assert len(posts) == 60


def test_single_post_and_bad_spec():
    assert len(gen_synth(SynthSpec(n_posts=1))) == 1
    with pytest.raises(ConfigError):
        gen_synth(SynthSpec(n_users=0))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 8), st.integers(1, 40), st.integers(1, 8), st.integers(2, 15), st.integers(0, 10**6))
def test_generation_rule(users, n, langs, tags, seed):
    raws = gen_synth(SynthSpec(users, n, langs, tags, seed))
    assert gen_synth(SynthSpec(users, n, langs, tags, seed)) == raws
    by_user = {}
    for r in raws:
        assert r.hashtags and len(r.text.split()) >= 3
        assert identify_language(r.text).value == r.lang or r.lang in ("hi", "mr")
        by_user.setdefault(r.user_id, []).append(r)
    for posts in by_user.values():
        common = set.intersection(*(set(p.hashtags) for p in posts))
        assert len(common) >= 2 or tags < 2
        for p in posts:
            same_lang = [q for q in posts if q.lang == p.lang]
            assert all(set(q.hashtags) == set(p.hashtags) for q in same_lang)
