import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import gae_loss_loop, random_corpus, sage_loop
from tagalog.corpus import CleanPost
from tagalog.gae import decode, encode, gae_loss, layer_shapes, sage_layer, target_adjacency
from tagalog.graph import GraphConfig, build_graph, synthetic_graph


def path_graph():
    posts = [CleanPost(f"p{i}", 0, "x", "hi", frozenset({0})) for i in range(3)]
    g = build_graph(posts, np.ones((3, 1)), None, GraphConfig(0.5, 10))
    return g


def test_path_hand_example():
    A = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    M = A / A.sum(1, keepdims=True)
    H = np.array([[1.0], [2.0], [3.0]])
    out = sage_layer(H, M, np.array([[1.0, 1.0]]), np.zeros(1)).data
    assert out[1, 0] == pytest.approx(math.tanh(4.0), abs=1e-12)
    assert out[1, 0] == pytest.approx(0.99933, abs=1e-5)


def test_isolated_zero_node():
    out = sage_layer(np.zeros((1, 2)), np.zeros((1, 1)), np.ones((2, 4)), np.zeros(2)).data
    assert not out.any()


def test_two_node_symmetry():
    M = np.array([[0.0, 1.0], [1.0, 0.0]])
    x = np.array([0.4, -0.7])
    out = sage_layer(np.stack([x, x]), M, np.arange(8.0).reshape(2, 4) / 10, np.ones(2)).data
    assert out[0].tobytes() == out[1].tobytes()


def test_one_layer_encode_equals_sage(rng):
    g = synthetic_graph()
    W, b = rng.normal(size=(4, 32)), rng.normal(size=4)
    a = encode(g.features, g, [(W, b)]).data
    assert a.tobytes() == sage_layer(g.features, g.aggregation_matrix(), W, b).data.tobytes()


def test_edgeless_graph_no_cross_flow(rng):
    H = rng.normal(size=(4, 3))
    W, b = rng.normal(size=(3, 6)), rng.normal(size=3)
    Z = encode(H, np.zeros((4, 4)), [(W, b)]).data
    Z2 = encode(H[[1, 0, 3, 2]], np.zeros((4, 4)), [(W, b)]).data
    np.testing.assert_array_equal(Z[[1, 0, 3, 2]], Z2)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 12))
def test_sage_matches_loop(seed, n):
    rng = np.random.default_rng(seed)
    posts, feats = random_corpus(rng, n, 3, dim=4)
    g = build_graph(posts, feats, None, GraphConfig(0.0, 3))
    H = rng.normal(size=(g.n_nodes, 4))
    W, b = rng.normal(size=(5, 8)), rng.normal(size=5)
    np.testing.assert_allclose(sage_layer(H, g, W, b).data, sage_loop(H, g.adjacency(), W, b), atol=1e-12)


def test_decode_examples():
    assert (decode(np.zeros((3, 2))).data == 0.5).all()
    A = decode(np.array([[1.0, 0.0], [1.0, 0.0]])).data
    assert A[0, 1] == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-12)
    assert A[0, 1] == pytest.approx(0.73106, abs=1e-5)


def test_gae_loss_examples():
    A = np.eye(3)
    assert float(gae_loss(A, A).data) == 0.0
    assert float(gae_loss(np.ones((1, 1)), np.full((1, 1), 0.5)).data) == pytest.approx(0.25)
    assert float(gae_loss(np.ones((1, 1)), np.full((1, 1), 0.5), "sum").data) == pytest.approx(0.25)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 10))
def test_gae_loss_matches_loop(seed, n):
    rng = np.random.default_rng(seed)
    A, A_hat = rng.random((n, n)), rng.random((n, n))
    assert abs(float(gae_loss(A, A_hat).data) - gae_loss_loop(A, A_hat)) < 1e-12


def test_target_has_unit_diagonal():
    g = synthetic_graph()
    T = target_adjacency(g)
    assert (np.diag(T) == 1).all() and np.array_equal(T, T.T)


def test_layer_shapes():
    assert layer_shapes(64, 32, 2) == [(32, 64), (32, 32)]
