import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from qsbits.bitkeys import (BitKey, Ordering, compare_with_cost, endpoint_one, endpoint_zero,
                            first_diff_index, key_from_literal, key_from_words, rotate_left,
                            rotate_right, sample_uniform_key)
from qsbits.errors import DepthCapExceeded

bitstrings = st.text(alphabet="01", min_size=1, max_size=80)


def lit(s, cap=4096):
    return key_from_literal(s, depth_cap=cap)


def test_first_diff_examples():
    assert first_diff_index(lit("101"), lit("100")) == 3
    assert first_diff_index(endpoint_zero(), endpoint_one()) == 1


def test_identical_keys_hit_depth_cap():
    pattern = "1010" * 16
    with pytest.raises(DepthCapExceeded):
        first_diff_index(lit(pattern, cap=64), lit(pattern, cap=64))


def test_compare_examples():
    assert compare_with_cost(lit("01"), lit("10")) == (Ordering.LESS, 1)
    assert compare_with_cost(lit("110"), lit("111")) == (Ordering.LESS, 3)
    assert compare_with_cost(lit("111"), lit("110")) == (Ordering.GREATER, 3)


def test_dyadic_conventions():
    half = lit("1")
    assert half.value() == 0.5
    assert half.bit(2) == 0 and half.bit(100) == 0
    one = endpoint_one()
    assert one.bit(1) == one.bit(500) == 1
    assert first_diff_index(half, one) == 2


def test_bad_literal():
    with pytest.raises(ValueError):
        key_from_literal("012")
    with pytest.raises(ValueError):
        key_from_literal("01...")


@given(bitstrings, bitstrings)
def test_symmetry_and_order(a, b):
    x, y = lit(a + "1"), lit(b + "0")
    # distinct as reals unless the padded strings coincide
    sx, sy = (a + "1").ljust(90, "0"), (b + "0").ljust(90, "0")
    if sx == sy:
        return
    bxy = first_diff_index(x, y)
    assert bxy == first_diff_index(y, x)
    assert bxy == next(i for i, (c, d) in enumerate(zip(sx, sy), 1) if c != d)
    order, cost = compare_with_cost(x, y)
    assert cost == bxy
    assert (order == Ordering.LESS) == (sx < sy)


@given(bitstrings, bitstrings, bitstrings)
def test_ultrametric(a, b, c):
    keys = [lit(s.ljust(90, "0") + "1") for s in (a, b, c)]
    vals = [s.ljust(90, "0") + "1" for s in (a, b, c)]
    if len(set(vals)) < 3:
        return
    x, y, z = keys
    assert first_diff_index(x, z) >= min(first_diff_index(x, y), first_diff_index(y, z))


def test_rotate_examples():
    x = lit("0110")
    assert rotate_left(x, 2).prefix(2) == "10"
    assert rotate_left(x, 0).prefix(10) == x.prefix(10)
    assert x.prefix(4) == "0110"


@given(st.integers(0, 2**64 - 1), st.integers(0, 40), st.integers(0, 40))
def test_rotate_composition(word, m1, m2):
    x = key_from_words([word, 12345])
    assert rotate_left(rotate_left(x, m1), m2).prefix(64) == rotate_left(x, m1 + m2).prefix(64)
    assert rotate_right(rotate_left(x, m1), m1).prefix(128) == x.prefix(128)


def test_streams_append_only(rng):
    x = sample_uniform_key(rng)
    head = x.prefix(20)
    x.bit(300)
    assert x.prefix(20) == head
    assert x.generated >= 300


def test_replay_is_deterministic():
    a = [sample_uniform_key(np.random.default_rng(5)).prefix(200) for _ in range(2)]
    assert a[0] == a[1]


def test_key_from_words_roundtrip():
    w = [0x8000000000000001, 0xFFFFFFFFFFFFFFFF]
    x = key_from_words(w)
    assert x.bit(1) == 1 and x.bit(64) == 1 and x.bit(2) == 0
    assert x.prefix(128)[64:] == "1" * 64
    assert x.bit(129) == 0


def test_uniform_first_bit_and_rank3_cells():
    rng = np.random.default_rng(1)
    n = 100_000
    # a key's first digits are the top bits of its first generated word; sample via words for speed
    keys = [sample_uniform_key(rng) for _ in range(2000)]
    first = np.mean([k.bit(1) for k in keys])
    assert abs(first - 0.5) < 4 * np.sqrt(0.25 / len(keys))
    cells = np.array([int(k.prefix(3), 2) for k in keys])
    counts = np.bincount(cells, minlength=8)
    assert stats.chisquare(counts).pvalue > 1e-3
    # larger sample through the same bit source
    from qsbits.bitkeys import FairBits
    src = FairBits(np.random.default_rng(2))
    chunks = [src(0) for _ in range(n)]
    tops = np.array([c >> (w - 3) for c, w in chunks])
    assert abs(np.mean(tops >= 4) - 0.5) < 4 * np.sqrt(0.25 / n)
    assert stats.chisquare(np.bincount(tops, minlength=8)).pvalue > 1e-3


def test_mean_cost_of_uniform_pairs():
    rng = np.random.default_rng(3)
    costs = [first_diff_index(sample_uniform_key(rng), sample_uniform_key(rng)) for _ in range(20_000)]
    costs = np.array(costs)
    se = costs.std(ddof=1) / np.sqrt(costs.size)
    assert abs(costs.mean() - 2) < 4 * se
    # tail law P(b > l) = 2^-l
    for ell in range(1, 8):
        p = 2.0**-ell
        assert abs(np.mean(costs > ell) - p) < 4 * np.sqrt(p * (1 - p) / costs.size)


def test_no_64_bit_collisions():
    rng = np.random.default_rng(4)
    words = rng.bit_generator.random_raw((100_000, 2))
    assert not np.any(words[:, 0] == words[:, 1])


def test_bitkey_rejects_bad_index(rng):
    x = sample_uniform_key(rng)
    with pytest.raises((ValueError, IndexError)):
        x.bit(0)
