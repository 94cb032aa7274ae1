import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from qsbits.densities import (DensitySpec, DyadicInterval, entropy_bits, interval_mass, rank_masses,
                              sample_key_from_density, smoothed_density)

LINEAR = DensitySpec.polynomial([0, 2])
UNIFORM = DensitySpec.uniform()
# piecewise example: 3/2 on [0, 1/2), quadratic on [1/2, 1)
PIECEWISE = DensitySpec([(0, Fraction(1, 2), [Fraction(3, 2)]),
                         (Fraction(1, 2), 1, [0, 0, Fraction(6, 7)])])
SPECS = [UNIFORM, LINEAR, PIECEWISE, DensitySpec.polynomial([Fraction(3, 4), 0, Fraction(3, 4)])]


def test_masses_examples():
    assert interval_mass(UNIFORM, DyadicInterval(5, 7)) == Fraction(1, 32)
    assert interval_mass(LINEAR, DyadicInterval(1, 1)) == Fraction(1, 4)
    assert interval_mass(LINEAR, DyadicInterval(1, 2)) == Fraction(3, 4)
    for spec in SPECS:
        assert interval_mass(spec, DyadicInterval(0, 1)) == 1


def test_linear_closed_form():
    # p_{k,j} = (2j - 1) / 4^k for f(x) = 2x
    for k in range(6):
        for j in range(1, 2**k + 1):
            assert interval_mass(LINEAR, DyadicInterval(k, j)) == Fraction(2 * j - 1, 4**k)


@pytest.mark.parametrize("spec", SPECS)
def test_ranks_sum_to_one(spec):
    for k in range(13):
        total = sum(interval_mass(spec, DyadicInterval(k, j)) for j in range(1, 2**k + 1))
        assert total == 1


@pytest.mark.parametrize("spec", SPECS)
@given(k=st.integers(0, 14), data=st.data())
def test_tower_and_martingale(spec, k, data):
    j = data.draw(st.integers(1, 2**k))
    iv = DyadicInterval(k, j)
    a, b = iv.children()
    assert interval_mass(spec, iv) == interval_mass(spec, a) + interval_mass(spec, b)
    lo, hi = iv.bounds
    x_left, x_right = lo + (hi - lo) / 4, lo + 3 * (hi - lo) / 4
    mid = (lo + hi) / 2
    if 0 < lo:
        parent = smoothed_density(spec, k, mid)
    else:
        parent = smoothed_density(spec, k, x_right)
    kids = (smoothed_density(spec, k + 1, x_left) + smoothed_density(spec, k + 1, x_right)) / 2
    assert parent == kids


@pytest.mark.parametrize("spec", SPECS)
def test_float_masses_match_exact(spec):
    for k in (0, 3, 9, 14):
        p = rank_masses(spec, k)
        js = [1, 2**k // 3 + 1, 2**k]
        for j in js:
            exact = interval_mass(spec, DyadicInterval(k, j))
            assert abs(p[j - 1] - float(exact)) <= 1e-15 * max(float(exact), 2.0**-k)
        assert abs(math.fsum(p) - 1) < 1e-12


def test_smoothed_examples():
    assert smoothed_density(UNIFORM, 7, Fraction(3, 10)) == 1
    assert smoothed_density(LINEAR, 1, Fraction(3, 10)) == Fraction(1, 2)
    for k in range(9):
        total = sum(smoothed_density(LINEAR, k, Fraction(2 * j - 1, 2**(k + 1))) * Fraction(1, 2**k)
                    for j in range(1, 2**k + 1))
        assert total == 1


def test_smoothing_converges_pointwise():
    x = Fraction(3, 7)
    errs = [abs(float(smoothed_density(LINEAR, k, x)) - 2 * float(x)) for k in (2, 6, 10)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 2.0**-9


def test_entropy_values():
    assert entropy_bits(UNIFORM) == 0
    h, err = entropy_bits(LINEAR, return_error=True)
    assert err <= 1e-10
    # independent oracle: quadrature of 2x ln(2x) / ln 2 written out directly
    ref, _ = integrate.quad(lambda x: 2 * x * np.log(2 * x) / np.log(2) if x > 0 else 0.0, 0, 1,
                            epsabs=1e-14)
    assert abs(h - ref) < 1e-10
    assert abs(h - (1 - 1 / (2 * math.log(2)))) < 1e-10
    for spec in SPECS:
        assert entropy_bits(spec) >= 0


@pytest.mark.parametrize("spec", SPECS)
def test_entropy_reflection_invariant(spec):
    assert abs(entropy_bits(spec) - entropy_bits(spec.reflected())) < 1e-10


def test_reflection_masses():
    refl = LINEAR.reflected()
    for j in range(1, 9):
        assert interval_mass(refl, DyadicInterval(3, j)) == interval_mass(LINEAR, DyadicInterval(3, 9 - j))


@pytest.mark.parametrize("pieces", [
    [(0, 1, [2])],                                     # mass 2
    [(0, 1, [3, -4])],                                  # mass 1 but negative near 1
    [(0, Fraction(1, 2), [1]), (Fraction(3, 4), 1, [1])],   # gap
    [(0, Fraction(1, 3), [1]), (Fraction(1, 3), 1, [1])],   # non-dyadic breakpoint
    [],
])
def test_invalid_specs(pieces):
    with pytest.raises(ValueError):
        DensitySpec(pieces)


def test_high_degree_needs_certificate():
    coeffs = [Fraction(1, 2), 0, 0, 0, Fraction(5, 2)]
    with pytest.raises(ValueError):
        DensitySpec.polynomial(coeffs)
    assert DensitySpec.polynomial(coeffs, certified=True).total_mass == 1


def test_json_roundtrip():
    for spec in SPECS:
        assert DensitySpec.from_json(spec.to_json()) == spec


def test_sampler_frequencies():
    rng = np.random.default_rng(11)
    n = 20_000
    keys = [sample_key_from_density(LINEAR, rng) for _ in range(n)]
    cells = np.array([int(k.prefix(2), 2) for k in keys])
    counts = np.bincount(cells, minlength=4)
    expected = n * np.array([1, 3, 5, 7]) / 16
    assert stats.chisquare(counts, expected).pvalue > 1e-3
    first = counts[2:].sum() / n
    assert abs(first - 0.75) < 4 * math.sqrt(0.75 * 0.25 / n)


def test_sampler_uniform_is_fair():
    rng = np.random.default_rng(12)
    keys = [sample_key_from_density(UNIFORM, rng) for _ in range(4000)]
    bits = np.array([[int(c) for c in k.prefix(8)] for k in keys])
    means = bits.mean(axis=0)
    assert np.all(np.abs(means - 0.5) < 4 * math.sqrt(0.25 / len(keys)))


def test_sampler_piecewise_deep_digits():
    # rank-6 cell frequencies, crossing the breakpoint and inside the quadratic piece
    rng = np.random.default_rng(13)
    keys = [sample_key_from_density(PIECEWISE, rng) for _ in range(20_000)]
    cells = np.array([int(k.prefix(6), 2) for k in keys])
    counts = np.bincount(cells, minlength=64)
    expected = len(keys) * np.array([float(interval_mass(PIECEWISE, DyadicInterval(6, j)))
                                     for j in range(1, 65)])
    assert stats.chisquare(counts, expected).pvalue > 1e-3
