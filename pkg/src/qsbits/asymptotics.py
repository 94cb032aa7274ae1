"""Residue formulas, asymptotic expansions and periodic fluctuation series.

Constants
---------
beta = 2 pi / ln 2 is the spacing of the imaginary poles.  The fluctuation
series converge super-exponentially because |Gamma(-1 - i beta k)| decays like
exp(-pi beta k / 2); the Rice residue sum for E B_n only decays like
k^-(n+3) once multiplied by n!/Gamma(n - i beta k), so its truncation is
chosen adaptively.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from scipy import integrate, special

from .errors import PoleArgument, QuadratureFailure

LN2 = math.log(2.0)
EULER = 0.57721566490153286060651209008240243
BETA = 2 * math.pi / LN2


@dataclass(frozen=True)
class ExpansionConstants:
    gamma_euler: float = EULER
    beta: float = BETA
    c1: float = (4 - 2 * EULER - LN2) / LN2
    c2: float = ((6 - LN2) ** 2 / 6 - (4 - LN2) * EULER + math.pi**2 / 6 + EULER**2) / LN2
    c4: float = 4 * LN2 + 2 + 2 * EULER
    c1_tilde: float = 7 / LN2 + 15 / 2 - (3 / LN2 + 2) * EULER
    sigma_sq: float = 7 - 2 * math.pi**2 / 3
    series_truncation: int = 8


CONSTANTS = ExpansionConstants()

# B_2m / (2m (2m - 1)) for the Stirling series
_STIRLING = [1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360,
             1 / 156, -3617 / 122400, 43867 / 244188, -174611 / 125400]
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def complex_log_gamma(z) -> complex:
    """Principal branch of log Gamma(z).

    The argument is shifted up with log Gamma(z) = log Gamma(z + 1) - log z
    until |z| is large enough for the Stirling series to reach double precision.
    """
    z = complex(z)
    if z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real):
        raise PoleArgument(f"Gamma has a pole at {z.real:g}")
    shift = 0j
    while z.real < 12 or abs(z) < 17:
        shift += cmath.log(z)
        z += 1
    inv = 1 / z
    inv2 = inv * inv
    series = 0j
    power = inv
    for c in _STIRLING:
        series += c * power
        power *= inv2
    return (z - 0.5) * cmath.log(z) - z + _HALF_LOG_2PI + series - shift


# --- periodic fluctuations ----------------------------------------------------

def _pi_coeff(k: int) -> complex:
    w = complex(-1, -BETA * k)
    return 1j / (math.pi * k * w) * cmath.exp(complex_log_gamma(w))


def _pi_tilde_coeff(k: int) -> complex:
    ib = 1j * BETA * k
    return (3 - ib) / (1 + ib) * cmath.exp(complex_log_gamma(-1 - ib)) / LN2


def _series(coeff, x: float, K: int) -> complex:
    if x <= 0:
        raise ValueError("x must be positive")
    lnx = math.log(x)
    total = 0j
    for k in range(1, K + 1):
        total += coeff(k) * cmath.exp(1j * BETA * k * lnx)
        total += coeff(-k) * cmath.exp(-1j * BETA * k * lnx)
    return total


def periodic_series(x: float, K: int = CONSTANTS.series_truncation, tilde: bool = False) -> complex:
    """Both halves k and -k summed explicitly; the imaginary part is rounding residue."""
    return _series(_pi_tilde_coeff if tilde else _pi_coeff, x, K)


def periodic_pi(x: float, K: int = CONSTANTS.series_truncation) -> float:
    """pi_x, the 1-periodic (in lg x) fluctuation in E B_n."""
    return periodic_series(x, K).real


def periodic_pi_tilde(x: float, K: int = CONSTANTS.series_truncation) -> float:
    """The BitsQuick counterpart of :func:`periodic_pi`."""
    return periodic_series(x, K, tilde=True).real


def periodic_tail_bound(K: int = CONSTANTS.series_truncation, tilde: bool = False) -> float:
    """Bound on the omitted terms |k| > K (|x^{i beta k}| = 1)."""
    coeff = _pi_tilde_coeff if tilde else _pi_coeff
    total = 0.0
    for k in range(K + 1, K + 60):
        total += abs(coeff(k)) + abs(coeff(-k))
    return total


# --- harmonic numbers in floating point -----------------------------------------

def harmonic_float(n: int, r: int = 1) -> float:
    if n <= 0:
        return 0.0
    if n <= 1_000_000:
        return math.fsum(1.0 / j**r for j in range(n, 0, -1))
    if r == 1:
        return float(special.digamma(n + 1.0)) + EULER
    if r == 2:
        return math.pi**2 / 6 - float(special.polygamma(1, n + 1.0))
    return float(special.zeta(r) - special.zeta(r, n + 1.0))


# --- Rice residue formulas --------------------------------------------------------

def _rice_fluctuation(n: int, K: int | None) -> complex:
    log_nfact = complex_log_gamma(n + 1)
    total = 0j
    k = 1
    quiet = 0
    while True:
        for kk in (k, -k):
            w = complex(-1, -BETA * kk)
            log_term = complex_log_gamma(w) + log_nfact - complex_log_gamma(complex(n, -BETA * kk))
            term = 1j / (math.pi * kk * w) * cmath.exp(log_term)
            total += term
        if K is not None:
            if k >= K:
                return total
        else:
            # terms decay at least like k^-(n+3); stop once they are negligible
            quiet = quiet + 1 if abs(term) < 1e-18 * max(1.0, n) else 0
            if (k >= CONSTANTS.series_truncation and quiet >= 3) or k >= 20000:
                return total
        k += 1


def rice_exact_bit_mean(n: int, K: int | None = None) -> float:
    """E B_n as the sum of residues: triple pole at 1, simple poles at 1 + i beta k,
    double pole at 0.  Exact up to rounding and truncation of the k-sum."""
    if n < 2:
        raise ValueError("n must be at least 2")
    h = harmonic_float(n - 1)
    h2 = harmonic_float(n - 1, 2)
    triple = n / LN2 * (h * h - (4 - LN2) * h + (6 - LN2) ** 2 / 6 + h2)
    double0 = -2 * (harmonic_float(n) + 2 * LN2 + 1)
    return triple + _rice_fluctuation(n, K).real + double0


def rice_exact_key_mean(n: int) -> float:
    """E K_n from its two double-pole residues."""
    if n < 1:
        raise ValueError("n must be at least 1")
    h = harmonic_float(n)
    return 2 * n * (h - 2 - 1 / n) + 2 * (h + 1)


# --- asymptotic expansions -----------------------------------------------------

def bit_mean_asymptotic(n: float, K: int = CONSTANTS.series_truncation) -> float:
    """n ln n lg n - c1 n ln n + c2 n + pi_n n (O(log n) remainder dropped)."""
    c = CONSTANTS
    ln = math.log(n)
    return n * ln * ln / LN2 - c.c1 * n * ln + c.c2 * n + periodic_pi(n, K) * n


def key_mean_asymptotic(n: float) -> float:
    ln = math.log(n)
    return 2 * n * ln - (4 - 2 * EULER) * n + 2 * ln + (2 * EULER + 1)


def bitsquick_mean_asymptotic(n: float, K: int = CONSTANTS.series_truncation) -> float:
    """(2 + 3/ln 2) n ln n - c1~ n + pi~_n n (O(log^2 n) remainder dropped)."""
    return (2 + 3 / LN2) * n * math.log(n) - CONSTANTS.c1_tilde * n + periodic_pi_tilde(n, K) * n


# --- Appendix-style calculus ---------------------------------------------------------

def _falling(s: complex, k: int) -> complex:
    out = complex(1)
    for i in range(k):
        out *= s - i
    return out


def incomplete_gamma_upper_expansion(s, lam: float, M: int):
    """Asymptotic expansion of the upper incomplete gamma integral.

    Returns ``(value, tail_bound)`` where value is
    e^-lam lam^s sum_{k<M} s(s-1)...(s-k+1) lam^-k.  Repeated integration by
    parts gives the remainder exactly as s^(M) times the same integral at s - M,
    which is at most e^-lam lam^(Re s - M) in modulus once Re s <= M.
    """
    if lam < 1:
        raise ValueError("lam must be at least 1")
    if M < 0:
        raise ValueError("M must be nonnegative")
    s = complex(s)
    pref = cmath.exp(-lam + s * math.log(lam))
    partial = sum(_falling(s, k) * lam**-k for k in range(M))
    value = pref * partial
    scale = math.exp(-lam) * lam**s.real
    # remainder = sum_{k=M}^{M'-1} (terms) + s^(M') I(s - M', lam), M' >= Re s
    m_full = max(M, math.ceil(s.real))
    tail = sum(abs(_falling(s, k)) * lam**-k for k in range(M, m_full))
    tail += abs(_falling(s, m_full)) * lam**-m_full
    value = value.real if s.imag == 0 else value
    return value, scale * tail


def incomplete_gamma_upper_quad(s: float, lam: float) -> float:
    """Reference value of the upper incomplete gamma integral by quadrature (real s)."""
    val, err = integrate.quad(lambda y: math.exp(-y) * y**s, lam, math.inf, epsabs=0, epsrel=1e-13, limit=200)
    return val


def gamma_integral_constants(verify: bool = False) -> tuple[float, float]:
    """(gamma_1(-1), gamma_2(-2)) = (-gamma, -(1 - gamma)).

    With ``verify`` both are recomputed by quadrature of their defining
    integrals and must agree to 1e-8.
    """
    g1, g2 = -EULER, -(1 - EULER)
    if verify:
        q1 = _quad_sum([
            (lambda y: math.expm1(-y) / y if y > 0 else -1.0, 0.0, 1.0),
            (lambda y: math.exp(-y) / y, 1.0, math.inf),
        ])
        q2 = _quad_sum([
            (_phi, 0.0, 1.0),
            (lambda y: math.expm1(-y) / (y * y), 1.0, math.inf),
        ])
        if abs(q1 - g1) > 1e-8 or abs(q2 - g2) > 1e-8:
            raise QuadratureFailure(f"quadrature gave ({q1}, {q2}), expected ({g1}, {g2})")
    return g1, g2


def _phi(y: float) -> float:
    """(e^-y - 1 + y) / y^2, evaluated without cancellation near 0."""
    if y < 0.1:
        # sum_{m>=0} (-y)^m / (m+2)!
        term, total, m = 0.5, 0.0, 0
        while abs(term) > 1e-18:
            total += term
            m += 1
            term *= -y / (m + 2)
        return total
    return (math.expm1(-y) + y) / (y * y)


def _quad_sum(parts) -> float:
    total = 0.0
    for fn, a, b in parts:
        val, err = integrate.quad(fn, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)
        if err > 1e-9:
            raise QuadratureFailure(f"quadrature error {err:.1e} on [{a}, {b}]")
        total += val
    return total
