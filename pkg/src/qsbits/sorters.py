"""Reference Quicksort, BitsQuick and radix-exchange sort on :class:`BitKey` inputs.

These run in pure Python and count every key comparison and every bit
compared.  They define the cost model; the compiled kernels used for large
simulations are checked against them on identical inputs.

Partitions are stable (each side keeps the input order), and the left
subarray is always processed before the right one, so a script of pivot
uniforms consumed in that preorder drives Quicksort and BitsQuick through the
same recursion tree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bitkeys import (BitKey, compare_with_cost, endpoint_one, endpoint_zero,
                      first_diff_index, Ordering, rotate_left, rotate_right)


@dataclass(frozen=True)
class TraceRecord:
    """One pivot: its rank and the rank range [left, right] of its subarray (1-based)."""

    rank: int
    left: int
    right: int


@dataclass
class ComparisonTally:
    key_comparisons: int = 0
    bit_comparisons: int = 0
    partition_trace: list[TraceRecord] | None = None

    def __post_init__(self):
        if self.key_comparisons < 0 or self.bit_comparisons < self.key_comparisons:
            raise ValueError("need 0 <= key_comparisons <= bit_comparisons")


class RngPivots:
    """Uniform pivot index per call from a numpy generator."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def __call__(self, size: int) -> int:
        return int(self.rng.integers(size))


class ScriptPivots:
    """Pivot index floor(u size) from a fixed list of uniforms, consumed in call preorder."""

    def __init__(self, uniforms: Sequence[float]):
        self.uniforms = list(uniforms)
        self.used = 0

    def __call__(self, size: int) -> int:
        if self.used >= len(self.uniforms):
            raise IndexError("pivot script exhausted")
        u = self.uniforms[self.used]
        self.used += 1
        if not 0 <= u < 1:
            raise ValueError(f"pivot script entry {u} outside [0, 1)")
        return int(u * size)


def _pivots(source) -> object:
    if isinstance(source, np.random.Generator):
        return RngPivots(source)
    if callable(source):
        return source
    return ScriptPivots(source)


def _partition(items, p, compare):
    """Stable three-way split around items[p]; returns (left, right, cost)."""
    pivot = items[p]
    left, right, cost = [], [], 0
    for idx, it in enumerate(items):
        if idx == p:
            continue
        order, bits = compare(it, pivot)
        cost += bits
        (left if order == Ordering.LESS else right).append(it)
    return left, right, cost


# --- Quicksort -------------------------------------------------------------------

def _quicksort(items, choose, tally, calls):
    """items are (key, input index) pairs; ``calls`` collects (pivot index, member indices)."""
    if len(items) <= 1:
        if items and calls is not None:
            calls.append((items[0][1], [items[0][1]]))
        return items
    p = choose(len(items))
    if calls is not None:
        calls.append((items[p][1], [i for _, i in items]))
    left, right, cost = _partition(items, p, lambda a, b: compare_with_cost(a[0], b[0]))
    tally.key_comparisons += len(items) - 1
    tally.bit_comparisons += cost
    return _quicksort(left, choose, tally, calls) + [items[p]] + _quicksort(right, choose, tally, calls)


def _ranked_trace(order, calls) -> list[TraceRecord]:
    rank = {idx: r for r, idx in enumerate(order, start=1)}
    recs = [TraceRecord(rank[piv], min(rank[i] for i in members), max(rank[i] for i in members))
            for piv, members in calls]
    return sorted(recs, key=lambda r: r.rank)


def quicksort(keys: Sequence[BitKey], rng, trace: bool = False):
    """Sort ``keys`` with random-pivot Quicksort, counting key and bit comparisons.

    ``rng`` is a numpy generator, a callable ``size -> index`` or a list of
    pivot uniforms.  With ``trace`` the tally records every pivot (including
    size-1 subarrays) by rank.
    """
    tally = ComparisonTally()
    calls = [] if trace else None
    out = _quicksort([(k, i) for i, k in enumerate(keys)], _pivots(rng), tally, calls)
    if trace:
        tally.partition_trace = _ranked_trace([i for _, i in out], calls)
    return [k for k, _ in out], tally


# --- BitsQuick -------------------------------------------------------------------

def _leading_run(x: BitKey) -> int:
    """Length of the run of identical leading digits of ``x``."""
    first = x.bit(1)
    m = 1
    while x.bit(m + 1) == first:
        m += 1
    return m


def _bitsquick_literal(items, m, choose, tally):
    """The routine as usually written: only the pivot's leading run is stripped.

    ``items`` hold (current view, input index); ``m`` is how far the caller
    rotated them and is undone on return.
    """
    if len(items) > 1:
        p = choose(len(items))
        x = items[p][0]
        m1 = _leading_run(x)
        left, right, cost = _partition(items, p, lambda a, b: compare_with_cost(a[0], b[0]))
        tally.key_comparisons += len(items) - 1
        tally.bit_comparisons += cost
        if x.bit(1) == 0:
            left = [(rotate_left(v, m1), i) for v, i in left]
            ml, mr = m1, 0
        else:
            right = [(rotate_left(v, m1), i) for v, i in right]
            ml, mr = 0, m1
        items = (_bitsquick_literal(left, ml, choose, tally) + [items[p]]
                 + _bitsquick_literal(right, mr, choose, tally))
    return [(rotate_right(v, m), i) for v, i in items]


def _bitsquick(items, m, undo, lo, hi, choose, tally):
    """BitsQuick knowing the bracketing keys ``lo < items < hi``.

    Every key in the subarray shares the first m = b(lo, hi) - 1 digits of
    ``lo`` and ``hi``; the items arrive rotated left by m and are rotated
    right by ``undo`` (the part added by the caller) on return.
    """
    if len(items) > 1:
        p = choose(len(items))
        pivot_full = items[p][2]
        left, right, cost = _partition(items, p, lambda a, b: compare_with_cost(a[0], b[0]))
        tally.key_comparisons += len(items) - 1
        tally.bit_comparisons += cost
        ml = first_diff_index(lo, pivot_full) - 1
        mr = first_diff_index(pivot_full, hi) - 1
        left = [(rotate_left(v, ml - m), i, full) for v, i, full in left]
        right = [(rotate_left(v, mr - m), i, full) for v, i, full in right]
        items = (_bitsquick(left, ml, ml - m, lo, pivot_full, choose, tally) + [items[p]]
                 + _bitsquick(right, mr, mr - m, pivot_full, hi, choose, tally))
    return [(rotate_right(v, undo), i, full) for v, i, full in items]


def bitsquick(keys: Sequence[BitKey], rng, literal: bool = False):
    """Sort ``keys`` with BitsQuick, counting bit comparisons on the stripped keys.

    By default each recursive call strips the whole prefix its keys are known
    to share, namely the common prefix of the two keys bracketing the
    subarray (0 and 1 at the top level).  This is what makes the total saving
    over Quicksort equal sum_i (R - L)(b(X_(L-1), X_(R+1)) - 1).  With
    ``literal=True`` only the pivot's leading run of equal digits is stripped
    at each level, which saves less (the bracketing prefix is not inherited
    across levels).
    """
    tally = ComparisonTally()
    choose = _pivots(rng)
    if literal:
        out = _bitsquick_literal([(k, i) for i, k in enumerate(keys)], 0, choose, tally)
    else:
        cap = min((k.depth_cap for k in keys), default=4096)
        out = _bitsquick([(k, i, k) for i, k in enumerate(keys)], 0, 0,
                         endpoint_zero(cap), endpoint_one(cap), choose, tally)
    if any(v.offset != keys[it[0]].offset for v, *it in out):
        raise AssertionError("rotations were not undone")
    return [keys[it[1]] for it in out], tally


# --- coupling and the savings identity ---------------------------------------------

def savings_from_trace(sorted_keys: Sequence[BitKey], records: Sequence[TraceRecord]) -> int:
    """sum_i (R(i) - L(i)) (b(X_(L-1), X_(R+1)) - 1) with sentinels X_(0) = 0, X_(n+1) = 1."""
    if not sorted_keys:
        return 0
    cap = sorted_keys[0].depth_cap
    padded = [endpoint_zero(cap), *sorted_keys, endpoint_one(cap)]
    return sum((r.right - r.left) * (first_diff_index(padded[r.left - 1], padded[r.right + 1]) - 1)
               for r in records)


def trace_lines(sorted_keys: Sequence[BitKey], records: Sequence[TraceRecord]) -> list[str]:
    """Debug dump, one line per pivot: "i L R b_sentinel"."""
    if not sorted_keys:
        return []
    cap = sorted_keys[0].depth_cap
    padded = [endpoint_zero(cap), *sorted_keys, endpoint_one(cap)]
    return [f"{r.rank} {r.left} {r.right} {first_diff_index(padded[r.left - 1], padded[r.right + 1])}"
            for r in records]


@dataclass
class CoupledResult:
    B: int
    Q: int
    savings_check: int
    trace: list[TraceRecord] = field(default_factory=list)

    def __iter__(self):
        return iter((self.B, self.Q, self.savings_check))


def coupled_run(keys: Sequence[BitKey], pivot_choices, literal: bool = False) -> CoupledResult:
    """Quicksort and BitsQuick on the same keys with the same pivot script.

    ``pivot_choices`` is a sequence of uniforms in [0, 1) (at least ``len(keys)``
    of them) or a numpy generator from which such a sequence is drawn.
    Returns B, Q and the trace-computed savings; unpacks as ``B, Q, s``.
    """
    if isinstance(pivot_choices, np.random.Generator):
        pivot_choices = pivot_choices.random(max(len(keys), 1))
    script = list(pivot_choices)
    out_q, tq = quicksort(keys, ScriptPivots(script), trace=True)
    out_b, tb = bitsquick(keys, ScriptPivots(script), literal=literal)
    if any(a is not b for a, b in zip(out_q, out_b)):
        raise AssertionError("Quicksort and BitsQuick disagree on the sorted order")
    if tq.key_comparisons != tb.key_comparisons:
        raise AssertionError("coupled runs made different numbers of key comparisons")
    saved = savings_from_trace(out_q, tq.partition_trace)
    return CoupledResult(tq.bit_comparisons, tb.bit_comparisons, saved, tq.partition_trace)


# --- radix exchange ------------------------------------------------------------

def radix_exchange(keys: Sequence[BitKey]):
    """Sort by splitting on digit 1, then digit 2 within each half, and so on.

    Returns ``(sorted keys, bit inspections)``; every digit read counts once.
    """
    inspections = 0
    out = []
    # explicit stack of (members, digit); right pushed first so left pops first
    stack = [(list(keys), 1)]
    while stack:
        members, d = stack.pop()
        if len(members) <= 1:
            out.extend(members)
            continue
        zeros, ones = [], []
        for k in members:
            (ones if k.bit(d) else zeros).append(k)
        inspections += len(members)
        stack.append((ones, d + 1))
        stack.append((zeros, d + 1))
    return out, inspections


def radix_expected_scale(n: int) -> float:
    """n lg n, the leading-order count of bit inspections."""
    return n * math.log2(n) if n > 1 else 0.0
