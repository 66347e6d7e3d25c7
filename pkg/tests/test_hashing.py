import numpy as np
from hypothesis import given, strategies as st

from tagalog.hashing import SplitMix64, fnv1a64, splitmix64_block, u64_to_signed_unit

M = (1 << 64) - 1


def ref_splitmix(state, n):
    out = []
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & M
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
        out.append(z ^ (z >> 31))
    return out


def test_fnv_published_vectors():
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64("foobar") == 0x85944171F73967E8


def test_splitmix_seed_zero():
    assert int(splitmix64_block(0, 1)[0]) == 0xE220A8397B1DCDAF


@given(st.integers(0, M), st.integers(1, 20))
def test_block_matches_scalar_reference(state, n):
    assert [int(x) for x in splitmix64_block(state, n)] == ref_splitmix(state, n)
    rng = SplitMix64(state)
    assert [rng.next_u64() for _ in range(n)] == ref_splitmix(state, n)


def test_signed_unit_range():
    words = np.array([0, M, 1 << 63], dtype=np.uint64)
    v = u64_to_signed_unit(words)
    assert v[0] == -1.0 and v[1] < 1.0 and v[2] == 0.0


@given(st.integers(0, 2**32), st.integers(1, 50))
def test_randbelow_in_range(seed, n):
    rng = SplitMix64(seed)
    assert all(0 <= rng.randbelow(n) < n for _ in range(20))


@given(st.lists(st.integers(), max_size=30), st.integers(0, 1000))
def test_shuffle_is_permutation(items, seed):
    shuffled = list(items)
    SplitMix64(seed).shuffle(shuffled)
    assert sorted(shuffled) == sorted(items)
