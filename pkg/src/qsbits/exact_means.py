"""Exact rational expectations for Quicksort and BitsQuick.

The alternating binomial sums cancel catastrophically in floating point
(terms near 1e25 for n = 100 summing to about 2295), so everything here is
done in exact rationals.  gmpy2's ``mpq`` carries the arithmetic and results
are returned as :class:`fractions.Fraction`.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb

from gmpy2 import mpq

MAX_N = 5000
KEY_MAX_N = 200_000  # E K_n only needs H_n, which stays cheap much further out


def _frac(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def _tree_sum(terms):
    """Pairwise summation keeps intermediate denominators small."""
    terms = list(terms)
    if not terms:
        return mpq(0)
    while len(terms) > 1:
        paired = [terms[i] + terms[i + 1] for i in range(0, len(terms) - 1, 2)]
        if len(terms) % 2:
            paired.append(terms[-1])
        terms = paired
    return terms[0]


def _check_n(n, lo=0, cap=MAX_N):
    if not isinstance(n, int) or n < lo:
        raise ValueError(f"n must be an integer >= {lo}, got {n!r}")
    if n > cap:
        raise ValueError(f"exact sums are capped at n = {cap}; use the residue formulas beyond")


@lru_cache(maxsize=None)
def _harmonic(n: int, r: int):
    return _tree_sum(mpq(1, j**r) for j in range(1, n + 1))


def harmonic(n: int, r: int = 1) -> Fraction:
    """H_n^{(r)} = sum_{j<=n} j^-r (H_0 = 0)."""
    if n < 0 or r < 1:
        raise ValueError("need n >= 0 and r >= 1")
    return _frac(_harmonic(n, r))


def exact_key_mean(n: int) -> Fraction:
    """E K_n = 2(n+1) H_n - 4n."""
    _check_n(n, cap=KEY_MAX_N)
    return _frac(2 * (n + 1) * _harmonic(n, 1) - 4 * n)


def exact_key_mean_altsum(n: int) -> Fraction:
    """E K_n as the alternating sum 2 sum_k (-1)^k C(n,k) / ((k-1) k)."""
    _check_n(n, 2)
    return _frac(_tree_sum(mpq((-1) ** k * 2 * comb(n, k), (k - 1) * k) for k in range(2, n + 1)))


def _bit_terms(n: int):
    # 1 / (1 - 2^-(k-1)) = 2^(k-1) / (2^(k-1) - 1)
    for k in range(2, n + 1):
        yield mpq((-1) ** k * 2 * comb(n, k) * 2 ** (k - 1), (k - 1) * k * (2 ** (k - 1) - 1))


@lru_cache(maxsize=256)
def _bit_mean(n: int):
    return _tree_sum(_bit_terms(n))


def exact_bit_mean(n: int) -> Fraction:
    """E B_n, expected bit comparisons of Quicksort on n uniform keys."""
    _check_n(n)
    return _frac(_bit_mean(n))


@lru_cache(maxsize=256)
def _q(n: int):
    h = _harmonic(n, 1)
    return 2 * n * h - 5 * n + 2 * h + 1


def q_term(n: int) -> Fraction:
    """q_n = 2 n H_n - 5n + 2 H_n + 1."""
    _check_n(n, 1)
    return _frac(_q(n))


def q_term_by_definition(n: int) -> Fraction:
    """q_n from its defining double sum, used to cross-check the closed form."""
    total = Fraction(0)
    for l in range(2, n):
        for r in range(l + 1, n):
            d = r - l
            total += Fraction(2 * d, (d + 2) * (d + 3))
    for r in range(2, n):
        total += Fraction(2 * (r - 1), r + 1)
    return total


@lru_cache(maxsize=256)
def _d_term(n: int):
    return _tree_sum(
        mpq((-1) ** k * comb(n, k) * (k - 3) * (k - 2) * 2 ** (k - 1),
            2 * k * (k - 1) * (2 ** (k - 1) - 1))
        for k in range(3, n + 1))


@lru_cache(maxsize=256)
def _e_term(n: int):
    return _tree_sum(
        mpq((-1) ** (k - 1) * comb(n, k) * (k - 2) * 2**k, k * (2**k - 1))
        for k in range(3, n + 1))


def savings_components(n: int) -> tuple[Fraction, Fraction, Fraction]:
    """(D_n, E_n, q_n) with E B_n - E Q_n = 2 D_n + 2 E_n - q_n."""
    _check_n(n, 1)
    return _frac(_d_term(n)), _frac(_e_term(n)), _frac(_q(n))


def exact_savings_mean(n: int) -> Fraction:
    """E B_n - E Q_n, the expected bit comparisons BitsQuick saves."""
    _check_n(n)
    if n < 2:
        return Fraction(0)
    return _frac(2 * _d_term(n) + 2 * _e_term(n) - _q(n))


@lru_cache(maxsize=256)
def _bitsquick_mean(n: int):
    terms = (
        mpq((-1) ** k * comb(n, k) * 2 * (k - 2) * 2**k, k * (2**k - 1))
        - mpq((-1) ** k * comb(n, k) * (k - 4) * 2 ** (k - 1), k * (2 ** (k - 1) - 1))
        for k in range(2, n + 1))
    return _tree_sum(terms) + _q(n)


def exact_bitsquick_mean(n: int) -> Fraction:
    """E Q_n, expected bit comparisons of BitsQuick on n uniform keys."""
    _check_n(n)
    if n < 2:
        return Fraction(0)
    return _frac(_bitsquick_mean(n))


def pairwise_rate(n: int, d) -> Fraction:
    """Density p_n of comparing keys at distance d, in closed and alternating form.

    Both forms are evaluated and must agree exactly.
    """
    d = Fraction(d)
    if not 0 < d < 1 or n < 2:
        raise ValueError("need 0 < d < 1 and n >= 2")
    closed = 2 / d**2 * ((1 - d) ** n - 1 + n * d)
    alt = 2 * sum((-1) ** k * comb(n, k) * d ** (k - 2) for k in range(2, n + 1))
    if closed != alt:
        raise ArithmeticError("closed and alternating forms of p_n disagree")
    return closed


def cancellation_report(n: int) -> tuple[float, float]:
    """Largest |term| of the alternating sum for E B_n, and the exact result, as floats."""
    _check_n(n, 2)
    biggest = max(abs(t) for t in _bit_terms(n))
    return float(biggest), float(_bit_mean(n))


def key_mean_by_recurrence(n_max: int) -> list[Fraction]:
    """E K_0..E K_{n_max} from E K_n = n - 1 + (2/n) sum_{j<n} E K_j."""
    out = [Fraction(0)]
    running = Fraction(0)
    for n in range(1, n_max + 1):
        running += out[-1]
        out.append(n - 1 + Fraction(2, n) * running)
    return out


def to_decimal(q: Fraction, digits: int = 20) -> str:
    """Correctly rounded decimal with ``digits`` digits after the point."""
    scaled = round(Fraction(q) * 10**digits)
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(scaled), 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}" if digits else f"{sign}{whole}"
