import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from finfoed.tensor import Rng
from finfoed.tensor.rng import LANES

M64 = (1 << 64) - 1


def _scalar_splitmix(state):
    state = (state + 0x9E3779B97F4A7C15) & M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return state, z ^ (z >> 31)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & M64


def _scalar_xoshiro(s):
    result = (_rotl((s[1] * 5) & M64, 7) * 9) & M64
    t = (s[1] << 17) & M64
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


def test_first_lane_matches_scalar_reference():
    seed = 12345
    sm, words = seed, []
    for _ in range(4):
        sm, out = _scalar_splitmix(sm)
        words.append(out)
    expected = [_scalar_xoshiro(words) for _ in range(3)]
    raw = Rng(seed).next_uint64(3 * LANES)
    assert [int(raw[k * LANES]) for k in range(3)] == expected


def test_identical_seeds_identical_streams():
    assert np.array_equal(Rng(7).uniform(1000), Rng(7).uniform(1000))
    assert not np.array_equal(Rng(7).uniform(10), Rng(8).uniform(10))


def test_chunked_draws_equal_one_draw():
    a = Rng(3)
    parts = np.concatenate([a.next_uint64(n) for n in (1, 255, 300, 12)])
    assert np.array_equal(parts, Rng(3).next_uint64(568))


def test_split_does_not_advance_parent():
    a, b = Rng(5), Rng(5)
    a.split(1)
    a.split(2)
    assert np.array_equal(a.uniform(20), b.uniform(20))


def test_split_is_deterministic_and_key_dependent():
    root = Rng(11)
    assert np.array_equal(root.split(4).uniform(8), Rng(11).split(4).uniform(8))
    assert not np.array_equal(root.split(4).uniform(8), root.split(5).uniform(8))


def test_split_children_are_uncorrelated():
    root = Rng(0)
    x, y = root.split(1).standard_normal(20000), root.split(2).standard_normal(20000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.03


def test_uniform_moments_and_range():
    u = Rng(1).uniform(100000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005
    assert abs(u.var() - 1 / 12) < 0.002


def test_normal_moments():
    z = Rng(2).standard_normal(100000)
    assert abs(z.mean()) < 0.015
    assert abs(z.std() - 1.0) < 0.015
    assert abs(np.mean(z ** 4) - 3.0) < 0.1


def test_scalar_draws_are_floats():
    r = Rng(0)
    assert isinstance(r.uniform(), float)
    assert isinstance(r.standard_normal(), float)
    assert isinstance(r.integers(0, 5), int)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**63), st.integers(-50, 50), st.integers(1, 100))
def test_integers_stay_in_range(seed, low, span):
    v = Rng(seed).integers(low, low + span, size=200)
    assert v.min() >= low and v.max() < low + span


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**63), st.integers(0, 300))
def test_permutation_is_a_permutation(seed, n):
    assert np.array_equal(np.sort(Rng(seed).permutation(n)), np.arange(n))


def test_permutation_positions_are_roughly_uniform():
    r = Rng(9)
    counts = np.zeros((4, 4))
    for _ in range(4000):
        p = r.permutation(4)
        counts[np.arange(4), p] += 1
    assert np.all(np.abs(counts - 1000) < 120)
