"""Compiled sorting kernels on packed key words.

Keys are rows of a ``uint64`` matrix, word 0 holding digits 1..64 (most
significant bit first).  Kernels that run past the materialized words stop
with ``NEED_MORE`` and the caller regenerates a wider matrix; generation is
column-deterministic, so the rerun sees the same keys with more digits.

Sentinel key ids: ``ZERO`` is the key 0 = .000..., ``ONE`` is 1 = .111...
"""
from __future__ import annotations

import numpy as np
from numba import njit

OK = 0
NEED_MORE = 1
ZERO = -1
ONE = -2
_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True)
def _clz(x):
    """Leading zero count of a nonzero uint64."""
    n = 0
    if x >> np.uint64(32) == 0:
        n += 32
        x <<= np.uint64(32)
    if x >> np.uint64(48) == 0:
        n += 16
        x <<= np.uint64(16)
    if x >> np.uint64(56) == 0:
        n += 8
        x <<= np.uint64(8)
    if x >> np.uint64(60) == 0:
        n += 4
        x <<= np.uint64(4)
    if x >> np.uint64(62) == 0:
        n += 2
        x <<= np.uint64(2)
    if x >> np.uint64(63) == 0:
        n += 1
    return n


@njit(cache=True)
def _word(words, a, w):
    if a == ZERO:
        return np.uint64(0)
    if a == ONE:
        return _ALL
    return words[a, w]


@njit(cache=True)
def first_diff(words, a, c):
    """b(a, c) for key ids or sentinels; -1 if the materialized words are equal."""
    for w in range(words.shape[1]):
        d = _word(words, a, w) ^ _word(words, c, w)
        if d != 0:
            return 64 * w + _clz(d) + 1
    return -1


@njit(cache=True)
def _digit(words, a, b):
    w = (b - 1) // 64
    return (_word(words, a, w) >> np.uint64(63 - (b - 1) % 64)) & np.uint64(1)


@njit(cache=True)
def quicksort_tally(words, pivot_u, perm, pairs, want_pairs):
    """Quicksort with stable partitions, left subarray first.

    Returns ``(status, K, B, Q)``.  Q charges each comparison b - m, where m is
    the common prefix length of the keys bracketing the current subarray, which
    is what BitsQuick pays on the same recursion tree.  ``perm`` receives the
    sorted order; ``pairs[i, j]`` counts comparisons between key ids when
    ``want_pairs`` is set.
    """
    n = words.shape[0]
    for i in range(n):
        perm[i] = i
    tmp = np.empty(n, dtype=np.int64)
    less = np.empty(n, dtype=np.bool_)
    cap = 2 * n + 2
    st_s = np.empty(cap, dtype=np.int64)
    st_e = np.empty(cap, dtype=np.int64)
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    st_m = np.empty(cap, dtype=np.int64)
    st_s[0], st_e[0], st_lo[0], st_hi[0], st_m[0] = 0, n, ZERO, ONE, 0
    top = 1
    K = 0
    B = 0
    Q = 0
    used = 0
    while top > 0:
        top -= 1
        s, e, lo, hi, m = st_s[top], st_e[top], st_lo[top], st_hi[top], st_m[top]
        size = e - s
        if size <= 1:
            continue
        p = s + int(pivot_u[used] * size)
        used += 1
        piv = perm[p]
        nl = 0
        for t in range(s, e):
            if t == p:
                continue
            y = perm[t]
            b = first_diff(words, y, piv)
            if b < 0:
                return NEED_MORE, K, B, Q
            B += b
            Q += b - m
            less[t] = _digit(words, y, b) == 0
            if less[t]:
                nl += 1
            if want_pairs:
                pairs[y, piv] += 1
                pairs[piv, y] += 1
        K += size - 1
        a = s
        c = s + nl + 1
        for t in range(s, e):
            if t == p:
                continue
            if less[t]:
                tmp[a] = perm[t]
                a += 1
            else:
                tmp[c] = perm[t]
                c += 1
        tmp[s + nl] = piv
        for t in range(s, e):
            perm[t] = tmp[t]
        mid = s + nl
        if e - mid - 1 > 1:
            br = first_diff(words, piv, hi)
            if br < 0:
                return NEED_MORE, K, B, Q
            st_s[top], st_e[top], st_lo[top], st_hi[top], st_m[top] = mid + 1, e, piv, hi, br - 1
            top += 1
        if nl > 1:
            bl = first_diff(words, lo, piv)
            if bl < 0:
                return NEED_MORE, K, B, Q
            st_s[top], st_e[top], st_lo[top], st_hi[top], st_m[top] = s, mid, lo, piv, bl - 1
            top += 1
    return OK, K, B, Q


@njit(cache=True)
def radix_tally(words, perm):
    """Radix-exchange sort; returns ``(status, bit inspections)``."""
    n = words.shape[0]
    depth = 64 * words.shape[1]
    for i in range(n):
        perm[i] = i
    tmp = np.empty(n, dtype=np.int64)
    cap = 2 * n + 2
    st_s = np.empty(cap, dtype=np.int64)
    st_e = np.empty(cap, dtype=np.int64)
    st_d = np.empty(cap, dtype=np.int64)
    st_s[0], st_e[0], st_d[0] = 0, n, 1
    top = 1 if n > 1 else 0
    inspections = 0
    while top > 0:
        top -= 1
        s, e, d = st_s[top], st_e[top], st_d[top]
        if d > depth:
            return NEED_MORE, inspections
        inspections += e - s
        a = s
        for t in range(s, e):
            if _digit(words, perm[t], d) == 0:
                tmp[a] = perm[t]
                a += 1
        c = a
        for t in range(s, e):
            if _digit(words, perm[t], d) == 1:
                tmp[c] = perm[t]
                c += 1
        for t in range(s, e):
            perm[t] = tmp[t]
        if e - a > 1:
            st_s[top], st_e[top], st_d[top] = a, e, d + 1
            top += 1
        if a - s > 1:
            st_s[top], st_e[top], st_d[top] = s, a, d + 1
            top += 1
    return OK, inspections


# --- density-driven digits -------------------------------------------------------

@njit(cache=True)
def _poly_mass(c, x):
    """Integral of sum c_i t^i over [0, x]."""
    acc = 0.0
    for i in range(c.shape[0] - 1, -1, -1):
        acc = acc * x + c[i] / (i + 1)
    return acc * x


@njit(cache=True, error_model="numpy")
def density_column(raw, rank_table, rank_offsets, top_rank, piece_lo, piece_hi, piece_coeffs,
                   state_k, state_j, state_poly, state_piece):
    """Digits of ``n`` keys drawn from a piecewise-polynomial density.

    Each digit is 1 with probability (mass of right child) / (mass of current
    interval) against a fresh uniform.  Up to rank ``top_rank`` the masses come
    from ``rank_table``; below that every interval sits inside one piece and
    the density restricted to it is carried as a polynomial g in the local
    coordinate t in [0, 1), renormalized to unit mass once per call.
    One call produces the next 64 digits of every key from ``raw[i, bit]``
    (uniform 64-bit words, the top 53 bits used) and advances the per-key
    state arrays, which start from ``state_piece = -1`` and zeros.
    """
    n = raw.shape[0]
    deg1 = piece_coeffs.shape[1]
    out = np.zeros(n, dtype=np.uint64)
    # sub[d, i, m]: coefficient of t^m in ((t + d) / 2)^i, i.e. g -> g((t + d) / 2)
    sub = np.zeros((2, deg1, deg1))
    for i in range(deg1):
        sub[0, i, i] = 0.5**i
        c = 1.0
        for m in range(i + 1):
            sub[1, i, m] = c * 0.5**i
            c = c * (i - m) / (m + 1)
    w_left = np.empty(deg1)
    w_full = np.empty(deg1)
    for i in range(deg1):
        w_left[i] = 0.5 ** (i + 1) / (i + 1)
        w_full[i] = 1.0 / (i + 1)
    g = np.empty(deg1)
    nxt = np.empty(deg1)
    scale = 2.0**-53
    for i in range(n):
        k = state_k[i]
        j = state_j[i]
        local = state_piece[i] >= 0
        tot = 1.0
        for mm in range(deg1):
            g[mm] = state_poly[i, mm]
        word = np.uint64(0)
        for bit in range(64):
            u = (raw[i, bit] >> np.uint64(11)) * scale
            if not local and k >= top_rank:
                # enter local coordinates: g(t) = f(a + h t) on the piece holding the interval
                h = 0.5**k
                a = j * h
                q = 0
                while not (piece_lo[q] <= a and a < piece_hi[q]):
                    q += 1
                state_piece[i] = q
                local = True
                for mm in range(deg1):
                    g[mm] = 0.0
                for ii in range(deg1):
                    ci = piece_coeffs[q, ii]
                    binom = 1.0
                    for mm in range(ii + 1):
                        g[mm] += ci * binom * a ** (ii - mm) * h**mm
                        binom = binom * (ii - mm) / (mm + 1)
                tot = 0.0
                for mm in range(deg1):
                    tot += g[mm] * w_full[mm]
            if local:
                # g is kept unnormalized with total mass tot; the digit is 1 with
                # probability (tot - left) / tot, and g((t + d) / 2) has total
                # 2 (child mass), so no division is needed per digit
                left = 0.0
                for mm in range(deg1):
                    left += g[mm] * w_left[mm]
                d = 1 if u * tot < tot - left else 0
                tot = 2.0 * (left + d * (tot - 2.0 * left))
                for mm in range(deg1):
                    acc = 0.0
                    for ii in range(mm, deg1):
                        acc += g[ii] * sub[d, ii, mm]
                    nxt[mm] = acc
                for mm in range(deg1):
                    g[mm] = nxt[mm]
            else:
                here = rank_table[rank_offsets[k] + j]
                p_right = rank_table[rank_offsets[k + 1] + 2 * j + 1] / here if here > 0 else 0.5
                d = 1 if u < p_right else 0
            if d:
                word |= np.uint64(1) << np.uint64(63 - bit)
            if not local:
                k += 1
                j = 2 * j + d
        out[i] = word
        state_k[i] = k
        state_j[i] = j
        for mm in range(deg1):
            state_poly[i, mm] = g[mm] / tot
    return out
