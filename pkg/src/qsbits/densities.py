"""Piecewise-polynomial key densities on (0, 1) with exact dyadic masses."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate

from .bitkeys import DEFAULT_DEPTH_CAP, BitKey
from .errors import QuadratureFailure, ZeroMassInterval

ENTROPY_TOL = 1e-10


@dataclass(frozen=True)
class DyadicInterval:
    """I_{k,j} = [(j-1) 2^-k, j 2^-k)."""

    rank: int
    index: int

    def __post_init__(self):
        if self.rank < 0 or not 1 <= self.index <= 2**self.rank:
            raise ValueError(f"invalid dyadic interval ({self.rank}, {self.index})")

    @property
    def bounds(self) -> tuple[Fraction, Fraction]:
        w = Fraction(1, 2**self.rank)
        return (self.index - 1) * w, self.index * w

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return (DyadicInterval(self.rank + 1, 2 * self.index - 1),
                DyadicInterval(self.rank + 1, 2 * self.index))


@dataclass(frozen=True)
class Piece:
    a: Fraction
    b: Fraction
    coeffs: tuple[Fraction, ...]  # ascending powers of x

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def antiderivative(self, x: Fraction) -> Fraction:
        acc = Fraction(0)
        for p, c in reversed(list(enumerate(self.coeffs))):
            acc = acc * x + c / (p + 1)
        return acc * x

    def integral(self, lo: Fraction, hi: Fraction) -> Fraction:
        return self.antiderivative(hi) - self.antiderivative(lo)


def _dyadic_rank(q: Fraction) -> int:
    den = q.denominator
    if den & (den - 1):
        raise ValueError(f"breakpoint {q} is not a dyadic rational")
    return den.bit_length() - 1


class DensitySpec:
    """Density on (0, 1) given by polynomial pieces on dyadic breakpoints.

    Construction checks that the pieces tile (0, 1), that every polynomial is
    nonnegative on its piece (exactly for degree <= 3, otherwise the caller
    passes ``certified=True``), and that the total mass is exactly 1.
    """

    def __init__(self, pieces, certified: bool = False):
        self.pieces = tuple(
            Piece(Fraction(a), Fraction(b), tuple(Fraction(c) for c in coeffs))
            for a, b, coeffs in pieces
        )
        if not self.pieces:
            raise ValueError("a density needs at least one piece")
        if self.pieces[0].a != 0 or self.pieces[-1].b != 1:
            raise ValueError("pieces must cover (0, 1)")
        for left, right in zip(self.pieces, self.pieces[1:]):
            if left.b != right.a:
                raise ValueError("pieces must be contiguous and ordered")
        for p in self.pieces:
            if not p.a < p.b:
                raise ValueError("empty piece")
            if len(p.coeffs) - 1 > 3 and not certified:
                raise ValueError("positivity of degree > 3 pieces must be certified by the caller")
            if len(p.coeffs) - 1 <= 3 and not _nonnegative_on(p):
                raise ValueError(f"density is negative on [{p.a}, {p.b})")
        self.breakpoint_rank = max(max(_dyadic_rank(p.a), _dyadic_rank(p.b)) for p in self.pieces)
        self.total_mass = sum((p.integral(p.a, p.b) for p in self.pieces), Fraction(0))
        if self.total_mass != 1:
            raise ValueError(f"total mass is {self.total_mass}, not 1")

    # convenience constructors -------------------------------------------------
    @classmethod
    def uniform(cls) -> "DensitySpec":
        return cls([(0, 1, [1])])

    @classmethod
    def polynomial(cls, coeffs, certified: bool = False) -> "DensitySpec":
        return cls([(0, 1, coeffs)], certified=certified)

    def reflected(self) -> "DensitySpec":
        """The density x -> f(1 - x)."""
        out = []
        for p in reversed(self.pieces):
            # expand sum c_i (1 - x)^i
            deg = len(p.coeffs) - 1
            new = [Fraction(0)] * (deg + 1)
            for i, c in enumerate(p.coeffs):
                for m in range(i + 1):
                    new[m] += c * math.comb(i, m) * (-1) ** m
            out.append((1 - p.b, 1 - p.a, new))
        return DensitySpec(out, certified=True)

    @property
    def is_uniform(self) -> bool:
        return all(p.coeffs[0] == 1 and not any(p.coeffs[1:]) for p in self.pieces)

    def __call__(self, x: float) -> float:
        for p in self.pieces:
            if x < p.b:
                return float(p(Fraction(x)))
        return float(self.pieces[-1](Fraction(x)))

    def sup_bound(self) -> float:
        """Upper bound on f from |coefficients| on each piece."""
        best = 0.0
        for p in self.pieces:
            m = max(abs(float(p.a)), abs(float(p.b)))
            best = max(best, sum(abs(float(c)) * m**i for i, c in enumerate(p.coeffs)))
        return best

    # serialization -------------------------------------------------------------
    def to_json(self) -> str:
        return json.dumps({"pieces": [
            {"a_num": p.a.numerator, "a_den": p.a.denominator,
             "b_num": p.b.numerator, "b_den": p.b.denominator,
             "coeffs": [str(c) for c in p.coeffs]}
            for p in self.pieces]}, indent=1)

    @classmethod
    def from_json(cls, text: str, certified: bool = False) -> "DensitySpec":
        data = json.loads(text)
        pieces = [(Fraction(d["a_num"], d["a_den"]), Fraction(d["b_num"], d["b_den"]),
                   [Fraction(c) for c in d["coeffs"]]) for d in data["pieces"]]
        return cls(pieces, certified=certified or data.get("certified", False))

    def __eq__(self, other):
        return isinstance(other, DensitySpec) and self.pieces == other.pieces

    def __hash__(self):
        return hash(self.pieces)

    def __repr__(self):
        return f"DensitySpec({len(self.pieces)} pieces)"


def load_density(path) -> DensitySpec:
    return DensitySpec.from_json(Path(path).read_text())


def _nonnegative_on(p: Piece) -> bool:
    if p(p.a) < 0 or p(p.b) < 0:
        return False
    deriv = [i * c for i, c in enumerate(p.coeffs)][1:]
    for r in _real_roots(deriv):
        if p.a < r < p.b and float(p(Fraction(r))) < -1e-15:
            return False
    return True


def _real_roots(coeffs) -> list[float]:
    c = [float(x) for x in coeffs]
    while c and c[-1] == 0:
        c.pop()
    if len(c) <= 1:
        return []
    if len(c) == 2:
        return [-c[0] / c[1]]
    disc = c[1] ** 2 - 4 * c[2] * c[0]
    if disc < 0:
        return []
    s = math.sqrt(disc)
    return [(-c[1] - s) / (2 * c[2]), (-c[1] + s) / (2 * c[2])]


def interval_mass(spec: DensitySpec, iv: DyadicInterval) -> Fraction:
    """p_{k,j}: exact mass of the dyadic interval."""
    return _interval_mass(spec, iv.rank, iv.index)


@lru_cache(maxsize=1 << 16)
def _interval_mass(spec: DensitySpec, k: int, j: int) -> Fraction:
    w = Fraction(1, 2**k)
    lo, hi = (j - 1) * w, j * w
    total = Fraction(0)
    for p in spec.pieces:
        a, b = max(lo, p.a), min(hi, p.b)
        if a < b:
            total += p.integral(a, b)
    return total


def rank_masses(spec: DensitySpec, k: int) -> np.ndarray:
    """All p_{k,j}, j = 1..2^k, as floats.

    Exact rationals are used while intervals can straddle breakpoints; deeper
    ranks integrate a Taylor expansion at each left endpoint, which avoids the
    cancellation of differencing the CDF.
    """
    if k <= spec.breakpoint_rank:
        return np.array([float(_interval_mass(spec, k, j)) for j in range(1, 2**k + 1)])
    h = 2.0**-k
    out = np.empty(2**k)
    for p in spec.pieces:
        j0 = int(p.a * 2**k)
        j1 = int(p.b * 2**k)
        a = np.arange(j0, j1, dtype=np.float64) * h
        coeffs = [float(c) for c in p.coeffs]
        deg = len(coeffs) - 1
        # integral over [a, a+h) = sum_m P^{(m)}(a) h^{m+1} / (m+1)!
        acc = np.zeros_like(a)
        deriv = coeffs
        for m in range(deg + 1):
            val = np.zeros_like(a)
            for c in reversed(deriv):
                val = val * a + c
            acc += val * h ** (m + 1) / math.factorial(m + 1)
            deriv = [i * c for i, c in enumerate(deriv)][1:]
        out[j0:j1] = acc
    return out


def smoothed_density(spec: DensitySpec, k: int, x) -> Fraction:
    """f_k(x) = 2^k p_{k,j} for the rank-k interval holding x."""
    x = Fraction(x)
    if not 0 < x < 1:
        raise ValueError("x must lie in (0, 1)")
    j = math.floor(x * 2**k) + 1
    return 2**k * _interval_mass(spec, k, j)


def entropy_bits(spec: DensitySpec, return_error: bool = False):
    """H(f) = integral of f lg f over (0, 1), with 0 lg 0 taken as 0."""
    total, err = 0.0, 0.0
    for p in spec.pieces:
        coeffs = [float(c) for c in p.coeffs]

        def integrand(x, coeffs=coeffs):
            v = 0.0
            for c in reversed(coeffs):
                v = v * x + c
            return v * math.log2(v) if v > 0 else 0.0

        val, e = integrate.quad(integrand, float(p.a), float(p.b), epsabs=1e-13, epsrel=1e-13, limit=200)
        total += val
        err += e
    if err > ENTROPY_TOL:
        raise QuadratureFailure(f"entropy quadrature error {err:.2e} exceeds {ENTROPY_TOL:.0e}")
    return (total, err) if return_error else total


class DensityBits:
    """Bit source for keys distributed per ``spec``, using exact rational masses.

    Each digit consumes one uniform ``u`` from ``draw``; the digit is 1 when
    ``u`` is below P(right half | current interval).
    """

    CHUNK = 8

    def __init__(self, spec: DensitySpec, draw):
        self.spec = spec
        self.draw = draw
        self.k = 0
        self.j = 1
        self.mass = Fraction(1)

    def __call__(self, have: int) -> tuple[int, int]:
        chunk = 0
        for _ in range(self.CHUNK):
            left = _interval_mass(self.spec, self.k + 1, 2 * self.j - 1) if self.k < 40 \
                else interval_mass_uncached(self.spec, self.k + 1, 2 * self.j - 1)
            if self.mass == 0:
                raise ZeroMassInterval(f"interval ({self.k}, {self.j}) has zero mass")
            right = self.mass - left
            bit = 1 if Fraction(self.draw()) * self.mass < right else 0
            self.k += 1
            self.j = 2 * self.j - 1 + bit
            self.mass = right if bit else left
            chunk = (chunk << 1) | bit
        return chunk, self.CHUNK


def interval_mass_uncached(spec: DensitySpec, k: int, j: int) -> Fraction:
    return _interval_mass.__wrapped__(spec, k, j)


def sample_key_from_density(spec: DensitySpec, rng: np.random.Generator,
                            depth_cap: int = DEFAULT_DEPTH_CAP) -> BitKey:
    """Key whose first k digits follow {p_{k,j}} exactly, for every k."""
    child = rng.spawn(1)[0]
    return BitKey.from_source(DensityBits(spec, child.random), depth_cap=depth_cap)
