import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import exact_edges, graph_violations, random_corpus
from tagalog.corpus import CleanPost
from tagalog.errors import DataError
from tagalog.graph import (GraphConfig, HeteroGraph, NodeId, attach_post, brute_force_edges, build_graph,
                           cosine, synthetic_graph)


def post(i, lang="hi", user=0):
    return CleanPost(f"p{i}", user, "a b c", lang, frozenset({0}))


def test_cosine_examples():
    v = np.array([0.3, -1.2, 2.0])
    assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)
    assert cosine([1, 0], [0, 1]) == pytest.approx(0.0, abs=1e-12)
    assert cosine([1, 1], [1, 0]) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    with pytest.raises(ValueError):
        cosine([0, 0], [1, 0])


def test_identical_same_family_posts_get_unit_edge():
    g = build_graph([post(0), post(1)], np.array([[1.0, 2.0], [1.0, 2.0]]), None, GraphConfig(0.5))
    assert g.edges[(0, 1)] == pytest.approx(1.0)


def test_family_gate():
    g = build_graph([post(0, "hi"), post(1, "ta")], np.array([[1.0, 2.0], [1.0, 2.0]]), None)
    assert (0, 1) not in g.edges


def test_single_post():
    g = build_graph([post(0)], np.array([[1.0, 0.0]]), None)
    assert g.n_nodes == 2 and g.edges == {(0, 1): 1.0}


def test_exact_mode_four_posts_any_sign():
    feats = np.array([[1.0, 0], [-1.0, 0], [0, 1.0], [0.5, -2.0]])
    posts = [post(i, lang) for i, lang in enumerate(["hi", "bn", "mr", "gu"])]
    g = build_graph(posts, feats, None, GraphConfig(exact_paper_mode=True))
    tweet_edges = [e for e in g.edges if e[1] < 4]
    assert len(tweet_edges) == 6
    assert g.edges[(0, 1)] == pytest.approx(-1.0)


def test_unknown_author_rejected():
    with pytest.raises(DataError):
        build_graph([post(0, user=-1)], np.ones((1, 2)), None)


def test_topk_tie_break_prefers_lower_index():
    feats = np.array([[1.0, 0], [1.0, 0], [1.0, 0], [1.0, 0]])
    g = build_graph([post(i) for i in range(4)], feats, None, GraphConfig(0.5, topk=1))
    # 0 keeps 1; 1 keeps 0; 2 keeps 0; 3 keeps 0
    assert sorted(e for e in g.edges if e[1] < 4) == [(0, 1), (0, 2), (0, 3)]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 30), st.integers(1, 5),
       st.sampled_from([0.0, 0.3, 0.5, 0.9]), st.sampled_from([1, 2, 10, None]))
def test_invariants_random(seed, n, users, tau, k):
    rng = np.random.default_rng(seed)
    posts, feats = random_corpus(rng, n, users)
    g = build_graph(posts, feats, None, GraphConfig(tau, k))
    assert graph_violations(g, posts, feats, tau, k) == []


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 25))
def test_exact_mode_matches_reference(seed, n):
    rng = np.random.default_rng(seed)
    posts, feats = random_corpus(rng, n, 4)
    g = build_graph(posts, feats, None, GraphConfig(exact_paper_mode=True))
    got = {(tuple(a), tuple(b)): w for a, b, w in g.edge_list()}
    ref = exact_edges(posts, feats)
    assert got.keys() == ref.keys()
    assert all(abs(got[k] - ref[k]) < 1e-12 for k in ref)
    lib = {(tuple(a), tuple(b)): w for (a, b), w in brute_force_edges(posts, feats).items()}
    assert lib.keys() == ref.keys()


def _two_tweet_graph():
    posts = [post(0, "hi", 0), post(1, "ta", 1)]
    feats = np.array([[1.0, 0.0], [0.0, 1.0]])
    return build_graph(posts, feats, None, GraphConfig(0.5, 10)), feats


def test_attach_known_author_without_family_peers():
    g, _ = _two_tweet_graph()
    hood = attach_post(g, CleanPost("n", 0, "x y z", "en", frozenset()), np.array([1.0, 1.0]))
    assert hood.nodes == [NodeId("user", 0)] and not hood.new_author


def test_attach_identical_tweet_and_threshold():
    g, feats = _two_tweet_graph()
    hood = attach_post(g, CleanPost("n", 0, "x y z", "mr", frozenset()), feats[0])
    assert NodeId("tweet", 0) in hood.nodes
    assert hood.weights[hood.nodes.index(NodeId("tweet", 0))] == pytest.approx(1.0)
    hood = attach_post(g, CleanPost("n", 5, "x y z", "mr", frozenset()), np.array([1.0, 1.0]),
                       GraphConfig(0.9, 10))
    assert hood.nodes == [NodeId("user", 5)] and hood.new_author and hood.rows == [-1]


def test_attach_does_not_modify_graph():
    g, _ = _two_tweet_graph()
    before = g.digest()
    attach_post(g, CleanPost("n", 0, "x", "hi", frozenset()), np.array([1.0, 0.2]))
    assert g.digest() == before


def test_json_and_csv_roundtrip():
    g = synthetic_graph()
    assert g.n_nodes == 20
    again = HeteroGraph.from_json(g.to_json())
    assert again.digest() == g.digest() and again.edges == g.edges
    buf = io.StringIO()
    g.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "src_kind,src_idx,dst_kind,dst_idx,weight" and len(lines) == len(g.edges) + 1


def test_aggregation_rows():
    g = synthetic_graph()
    M = g.aggregation_matrix()
    A = g.adjacency()
    for v in range(g.n_nodes):
        if A[v].any():
            assert abs(np.abs(M[v]).sum() - 1) < 1e-12
