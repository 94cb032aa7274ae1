"""Poissonized means: E K(lam), E B(lam) = mu_unif(lam) and mu_f(lam)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate, special

from .asymptotics import CONSTANTS, EULER, LN2, _phi, periodic_pi
from .densities import DensitySpec, rank_masses
from .errors import QuadratureFailure


@dataclass(frozen=True)
class PoissonEvalPolicy:
    quad_tol: float = 1e-12
    quad_rel_tol: float = 1e-13
    dyadic_threshold: float = 1e-6
    series_extra_bits: int = 64

    def __post_init__(self):
        if self.quad_tol <= 0:
            raise ValueError("quadrature tolerance must be positive")
        if not 0 < self.dyadic_threshold < 1:
            raise ValueError("dyadic threshold must lie in (0, 1)")


DEFAULT_POLICY = PoissonEvalPolicy()


def poisson_key_mean_exact(lam: float, policy: PoissonEvalPolicy = DEFAULT_POLICY,
                           return_error: bool = False):
    """E K(lam) = 2 int_0^lam (lam - y)(e^-y - 1 + y) y^-2 dy by adaptive quadrature.

    The part above y = 1 is integrated in log y, where the integrand is smooth.
    With ``return_error`` the quadrature's error estimate is returned as well.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    head = min(lam, 1.0)
    v1, e1 = integrate.quad(lambda y: (lam - y) * _phi(y), 0.0, head,
                            epsabs=policy.quad_tol / 4, epsrel=policy.quad_rel_tol, limit=200)
    v2 = e2 = 0.0
    if lam > 1:
        def g(t):
            y = math.exp(t)
            return (lam - y) * _phi(y) * y
        v2, e2 = integrate.quad(g, 0.0, math.log(lam), epsabs=policy.quad_tol / 4,
                                epsrel=policy.quad_rel_tol, limit=400)
    value = 2 * (v1 + v2)
    err = 2 * (e1 + e2)
    if err > policy.quad_tol + policy.quad_rel_tol * 10 * abs(value):
        raise QuadratureFailure(f"E K({lam}) quadrature error {err:.2e}")
    return (value, err) if return_error else value


def _ein(x: np.ndarray) -> np.ndarray:
    """Ein(x) = int_0^x (1 - e^-t) / t dt, the entire exponential integral."""
    out = np.empty_like(x)
    small = x < 1.0
    xs = x[small]
    total = np.zeros_like(xs)
    term = np.ones_like(xs)
    for k in range(1, 30):
        term = term * xs / k
        total += (-1) ** (k + 1) * term / k
    out[small] = total
    xl = x[~small]
    out[~small] = special.exp1(xl) + np.log(xl) + EULER
    return out


def poisson_key_mean_closed(lam) -> np.ndarray:
    """E K(lam) = 2(lam + 1) Ein(lam) - 4 lam + 2(1 - e^-lam), vectorized.

    Integrating the quadrature form by parts gives this; it is the Poisson
    analogue of 2(n+1)H_n - 4n and is used where millions of evaluations are
    needed.
    """
    x = np.asarray(lam, dtype=np.float64)
    flat = x.reshape(-1)
    out = np.empty_like(flat)
    tiny = flat < 1e-3
    xt = flat[tiny]
    # 2 sum_{m>=2} (-1)^m x^m / (m! (m-1) m), enough terms for x < 1e-3
    out[tiny] = xt**2 / 2 - xt**3 / 18 + xt**4 / 144 - xt**5 / 1200
    xr = flat[~tiny]
    out[~tiny] = 2 * (xr + 1) * _ein(xr) - 4 * xr - 2 * np.expm1(-xr)
    return out.reshape(x.shape) if x.shape else float(out[0])


def _series_bits(lam: float, policy: PoissonEvalPolicy) -> int:
    return int(2 * lam * math.log2(math.e)) + policy.series_extra_bits


def poisson_key_mean_series(lam, policy: PoissonEvalPolicy = DEFAULT_POLICY) -> mpmath.mpf:
    """Alternating series 2 sum_k (-1)^k lam^k / (k! (k-1) k) at raised precision.

    Working precision grows like lam lg e bits to absorb the e^lam-sized terms.
    """
    lam = mpmath.mpf(lam)
    bits = _series_bits(float(lam), policy)
    with mpmath.workprec(bits):
        total = mpmath.mpf(0)
        term = lam  # lam^k / k!
        k = 1
        while True:
            k += 1
            term = term * lam / k
            piece = term / ((k - 1) * k)
            total += piece if k % 2 == 0 else -piece
            if k > lam and abs(piece) < mpmath.mpf(2) ** (-bits) * max(abs(total), 1):
                break
        return 2 * total


def poisson_bit_mean_series(lam, policy: PoissonEvalPolicy = DEFAULT_POLICY) -> mpmath.mpf:
    """E B(lam) from 2 sum_k (-1)^k lam^k/k! / ((k-1) k (1 - 2^-(k-1))) at raised precision."""
    lam = mpmath.mpf(lam)
    bits = _series_bits(float(lam), policy)
    with mpmath.workprec(bits):
        total = mpmath.mpf(0)
        term = lam
        k = 1
        while True:
            k += 1
            term = term * lam / k
            piece = term / ((k - 1) * k * (1 - mpmath.mpf(2) ** (1 - k)))
            total += piece if k % 2 == 0 else -piece
            if k > lam and abs(piece) < mpmath.mpf(2) ** (-bits) * max(abs(total), 1):
                break
        return 2 * total


def poisson_key_mean_asymptotic(lam: float, M: int = 0) -> float:
    """2 lam ln lam - (4 - 2 gamma) lam + 2 ln lam + 2 gamma + 2, plus the
    exponentially small refinement 2 e^-lam sum_{k=1}^{M-1} (-1)^(k+1) k k! lam^-(k+1).

    The remainder of the four main terms is exactly 2(lam + 1) E1(lam) - 2 e^-lam;
    expanding E1 gives the refinement, whose leading term is 2 e^-lam lam^-2.
    """
    if lam < 2:
        raise ValueError("lam must be at least 2")
    ln = math.log(lam)
    main = 2 * lam * ln - (4 - 2 * EULER) * lam + 2 * ln + 2 * EULER + 2
    refine = sum((-1) ** (k + 1) * k * math.factorial(k) * lam ** (-k - 1) for k in range(1, M))
    return main + 2 * math.exp(-lam) * refine


def _dyadic_tail(lam: float, k_last: int) -> tuple[float, float]:
    """sum_{k > k_last} 2^k E K(2^-k lam) from the small-x series of E K, and a bound on
    what the two kept orders leave out."""
    x = lam * 2.0 ** -(k_last + 1)
    # sum_{k>K} 2^k (2^-k lam)^m = lam x^(m-1) / (1 - 2^(1-m))
    order2 = lam * x / 2 / (1 - 0.5)
    order3 = -lam * x**2 / 18 / (1 - 0.25)
    bound = lam * x**3 / 144 / (1 - 0.125)
    return order2 + order3, bound


def poisson_bit_mean_exact(lam: float, policy: PoissonEvalPolicy = DEFAULT_POLICY,
                           return_error: bool = False):
    """mu_unif(lam) = sum_k 2^k E K(2^-k lam), each term by quadrature.

    The k-sum stops once 2^-k lam falls below the policy threshold; the rest
    is summed from the small-argument series of E K and its bound is reported.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    terms = []
    k = 0
    while True:
        x = lam * 2.0**-k
        terms.append(2.0**k * poisson_key_mean_exact(x, policy))
        if x < policy.dyadic_threshold:
            break
        k += 1
    tail, bound = _dyadic_tail(lam, k)
    value = math.fsum(terms) + tail
    if return_error:
        quad_err = sum(t * policy.quad_rel_tol * 10 for t in terms)
        return value, bound + quad_err
    return value


def poisson_bit_mean_asymptotic(lam: float, refined: bool = False, log_base: float = math.e) -> float:
    """lam ln lam lg lam - c1 lam ln lam + c2 lam + pi_lam lam.

    ``refined`` adds -2 log lam - c4.  The printed remainder leaves the base of
    the logarithm open; the natural log is the one that fits the dyadic sum
    (see :func:`calibrate_refinement_base`).
    """
    if lam < 2:
        raise ValueError("lam must be at least 2")
    c = CONSTANTS
    ln = math.log(lam)
    value = lam * ln * ln / LN2 - c.c1 * lam * ln + c.c2 * lam + periodic_pi(lam) * lam
    if refined:
        value += -2 * math.log(lam, log_base) - c.c4
    return value


def calibrate_refinement_base(lams=None) -> dict:
    """Least-squares fit of exact - unrefined = a log lam + b against the dyadic sum.

    Returns the fitted slope against ln lam and the residual norms for the two
    candidate bases; a slope near -2 in ln lam selects the natural log.
    """
    if lams is None:
        lams = [2.0**e for e in range(10, 21)]
    lams = np.asarray(lams, dtype=float)
    resid = np.array([poisson_bit_mean_exact(x) - poisson_bit_mean_asymptotic(x) for x in lams])
    out = {}
    for name, logs in (("ln", np.log(lams)), ("lg", np.log2(lams))):
        fixed = resid - (-2 * logs - CONSTANTS.c4)
        out[f"rms_{name}"] = float(np.sqrt(np.mean(fixed**2)))
    design = np.column_stack([np.log(lams), np.ones_like(lams)])
    (slope, intercept), *_ = np.linalg.lstsq(design, resid, rcond=None)
    out["slope_ln"] = float(slope)
    out["intercept"] = float(intercept)
    out["base"] = "ln" if out["rms_ln"] < out["rms_lg"] else "lg"
    return out


def _slope_bound(spec: DensitySpec) -> float:
    """Upper bound on |f'| from |coefficients| on each piece."""
    best = 0.0
    for p in spec.pieces:
        m = max(abs(float(p.a)), abs(float(p.b)))
        best = max(best, sum(i * abs(float(c)) * m ** (i - 1) for i, c in enumerate(p.coeffs) if i))
    return best


def mu_f(lam: float, spec: DensitySpec, depth: int = 24, chunk: int = 1 << 20) -> tuple[float, float]:
    """mu_f(lam) = sum_k sum_j E K(lam p_{k,j}), summed through rank ``depth``.

    Returns ``(value, tail_bound)``.  Beyond ``depth`` the sum is dominated by
    lam^2/2 sum_j p_{k,j}^2, and splitting an interval of mass p into children
    a + b = p gives a^2 + b^2 = p^2/2 + (a - b)^2/2, so that part is added in
    closed form as lam^2/2 S_depth with S_depth = sum_j p_{depth,j}^2.  The
    bound covers what this leaves out: the cubic terms of E K (at most
    lam^3 sup f^2 4^-depth / 54) and the (a - b)^2 corrections (at most
    lam^2 sup|f'|^2 2^(-3 depth) / 24).  If lam sup f 2^-depth is too large for
    the small-argument bounds, the cruder lam^2 sup f 2^-depth / 2 is used.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if not 0 <= depth <= 24:
        raise ValueError("depth must lie in [0, 24]")
    parts = []
    sq = 0.0
    for k in range(depth + 1):
        if spec.is_uniform:
            # all 2^k masses are equal
            parts.append(2.0**k * poisson_key_mean_closed(lam * 2.0**-k))
            sq = 2.0**-k
            continue
        p = rank_masses(spec, k)
        for start in range(0, p.size, chunk):
            parts.append(float(np.sum(poisson_key_mean_closed(lam * p[start:start + chunk]))))
        if k == depth:
            sq = math.fsum(p * p)
    sup = spec.sup_bound()
    if lam * sup * 2.0 ** -(depth + 1) < 1:
        parts.append(lam * lam * sq / 2)
        tail = lam**3 * sup**2 * 4.0**-depth / 54 + lam**2 * _slope_bound(spec) ** 2 * 2.0 ** (-3 * depth) / 24
    else:
        tail = lam * lam * sup * 2.0**-depth / 2
    return math.fsum(parts), tail


def bits_per_key_prediction(lam: float) -> float:
    """Predicted B/K ratio (1/2) lg lam."""
    if lam <= 1:
        raise ValueError("lam must exceed 1")
    return 0.5 * math.log2(lam)
