import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tagalog.attention import AttnParams, lga, mean_pool, uga, word_attention_pool
from tagalog.autograd import Tensor


def params(rng, D, scale=1.0):
    def t(*shape):
        return Tensor(rng.normal(scale=scale, size=shape), requires_grad=True)
    return AttnParams(t(D, D), t(D), t(D, D), t(D), t(D, D), t(D), t(D))


def ref_attention(T, g, W, b, mask):
    """Per-position loop with an explicit softmax over unmasked slots."""
    S = T.shape[0]
    h = [np.tanh(T[s] @ W + b) for s in range(S)]
    scores = [float(h[s] @ g) for s in range(S)]
    live = [s for s in range(S) if mask[s]]
    top = max(scores[s] for s in live)
    z = sum(math.exp(scores[s] - top) for s in live)
    alpha = np.array([math.exp(scores[s] - top) / z if mask[s] else 0.0 for s in range(S)])
    return alpha, sum(alpha[s] * h[s] for s in range(S))


def test_hand_example():
    p = AttnParams(*(Tensor(np.array(x)) for x in ([[1.0]], [0.0], [[1.0]], [0.0], [[1.0]], [0.0], [1.0])))
    out = lga(np.array([[0.5], [-0.5]]), np.array([1.0]), p, np.array([True, True]))
    h = math.tanh(0.5)
    assert out.hidden.data[:, 0] == pytest.approx([h, -h], abs=1e-12)
    assert out.weights.data == pytest.approx([0.7159, 0.2841], abs=1e-3)
    assert float(out.pooled.data[0]) == pytest.approx(0.1995, abs=1e-3)


def test_zero_guide_is_uniform(rng):
    p = params(rng, 4)
    mask = np.array([True, True, True, False, False])
    out = lga(rng.normal(size=(5, 4)), np.zeros(4), p, mask)
    np.testing.assert_allclose(out.weights.data, [1 / 3] * 3 + [0, 0], atol=1e-15)
    out = uga(rng.normal(size=(5, 4)), np.zeros(4), p, mask)
    np.testing.assert_allclose(out.weights.data, [1 / 3] * 3 + [0, 0], atol=1e-15)


def test_lga_uga_symmetry(rng):
    p = params(rng, 3)
    p.W_u, p.b_u = p.W_l, p.b_l
    T, g, mask = rng.normal(size=(4, 3)), rng.normal(size=3), np.array([1, 1, 1, 0], bool)
    a, b = lga(T, g, p, mask), uga(T, g, p, mask)
    assert a.pooled.data.tobytes() == b.pooled.data.tobytes()


def test_uga_pool_hl_pools_language_hidden(rng):
    p = params(rng, 3)
    T, g, mask = rng.normal(size=(4, 3)), rng.normal(size=3), np.ones(4, bool)
    out = uga(T, g, p, mask, pool_hl=True)
    h_l = np.tanh(T @ p.W_l.data + p.b_l.data)
    np.testing.assert_allclose(out.pooled.data, out.weights.data @ h_l, atol=1e-14)


def test_word_pool_special_cases(rng):
    p = params(rng, 3)
    p.c_w = Tensor(np.zeros(3))
    T, mask = rng.normal(size=(4, 3)), np.array([1, 1, 0, 0], bool)
    h = np.tanh(T @ p.W_w.data + p.b_w.data)
    np.testing.assert_allclose(word_attention_pool(T, p, mask).data, h[:2].mean(0), atol=1e-14)


def test_single_token_pools_its_hidden_row(rng):
    p = params(rng, 3)
    T, one = rng.normal(size=(4, 3)), np.array([0, 0, 1, 0], bool)
    h = np.tanh(T @ p.W_w.data + p.b_w.data)
    np.testing.assert_allclose(word_attention_pool(T, p, one).data, h[2], atol=1e-15)


def test_matches_loop_reference_batched(rng):
    p = params(rng, 5)
    T = rng.normal(size=(3, 6, 5))
    g = rng.normal(size=(3, 5))
    mask = np.array([[1] * 6, [1, 1, 1, 0, 0, 0], [1, 0, 0, 0, 0, 0]], bool)
    out = lga(T, g, p, mask)
    for i in range(3):
        alpha, pooled = ref_attention(T[i], g[i], p.W_l.data, p.b_l.data, mask[i])
        np.testing.assert_allclose(out.weights.data[i], alpha, atol=1e-12)
        np.testing.assert_allclose(out.pooled.data[i], pooled, atol=1e-12)


def test_mean_pool_ignores_pad(rng):
    T = rng.normal(size=(4, 2))
    mask = np.array([1, 1, 0, 0], bool)
    np.testing.assert_allclose(mean_pool(T, mask).data, T[:2].mean(0))


def test_all_pad_rejected(rng):
    with pytest.raises(ValueError):
        lga(rng.normal(size=(2, 3)), np.ones(3), params(rng, 3), np.zeros(2, bool))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 8), st.integers(1, 6), st.floats(0.1, 5.0))
def test_weights_are_distribution(seed, S, D, scale):
    rng = np.random.default_rng(seed)
    mask = rng.random(S) < 0.6
    mask[rng.integers(S)] = True
    p = params(rng, D, scale)
    for out in (lga(rng.normal(size=(S, D)), rng.normal(size=D), p, mask),
                uga(rng.normal(size=(S, D)), rng.normal(size=D), p, mask)):
        w = out.weights.data
        assert (w >= 0).all() and (w[~mask] == 0).all()
        assert abs(w.sum() - 1) < 1e-6
