"""Keys in [0, 1] represented as lazily generated bit streams.

Bit ``i`` (1-based) of a key has weight ``2**-i``.  Streams only grow, so a
bit never changes once it has been drawn.  Several :class:`BitKey` objects may
share one stream at different offsets; that is how left rotation is done
without copying.
"""
from __future__ import annotations

import enum

import numpy as np

from .errors import DepthCapExceeded

DEFAULT_DEPTH_CAP = 4096
CHUNK = 64


class Ordering(enum.IntEnum):
    LESS = -1
    GREATER = 1


class FairBits:
    """Independent fair bits drawn from a private numpy generator."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def __call__(self, have: int) -> tuple[int, int]:
        return int.from_bytes(self.rng.bytes(CHUNK // 8), "big"), CHUNK


class ConstantTail:
    """Repeats one digit forever (0 for terminating expansions, 1 for the endpoint 1)."""

    def __init__(self, digit: int):
        self.digit = digit

    def __call__(self, have: int) -> tuple[int, int]:
        return ((1 << CHUNK) - 1 if self.digit else 0), CHUNK


class _Stream:
    __slots__ = ("word", "nbits", "source")

    def __init__(self, word, nbits, source):
        self.word = word
        self.nbits = nbits
        self.source = source

    def extend_to(self, nbits: int, cap: int) -> None:
        if nbits > cap:
            raise DepthCapExceeded(cap)
        while self.nbits < nbits:
            chunk, length = self.source(self.nbits)
            self.word = (self.word << length) | chunk
            self.nbits += length

    def window(self, start: int, length: int) -> int:
        """Bits ``start+1 .. start+length`` (absolute, 0-based start) as an int."""
        return (self.word >> (self.nbits - start - length)) & ((1 << length) - 1)


class BitKey:
    """A real in [0, 1] whose binary digits are produced on demand."""

    __slots__ = ("_stream", "offset", "depth_cap")

    def __init__(self, stream: _Stream, offset: int = 0, depth_cap: int = DEFAULT_DEPTH_CAP):
        self._stream = stream
        self.offset = offset
        self.depth_cap = depth_cap

    @classmethod
    def from_source(cls, source, prefix: str = "", depth_cap: int = DEFAULT_DEPTH_CAP) -> "BitKey":
        word = int(prefix, 2) if prefix else 0
        return cls(_Stream(word, len(prefix), source), 0, depth_cap)

    def bit(self, i: int) -> int:
        """Digit ``i`` (1-based) of this key."""
        if i < 1:
            raise IndexError("bit indices start at 1")
        pos = self.offset + i
        self._stream.extend_to(pos, self.depth_cap)
        return self._stream.window(pos - 1, 1)

    def prefix(self, length: int) -> str:
        self._stream.extend_to(self.offset + length, self.depth_cap)
        if length == 0:
            return ""
        return format(self._stream.window(self.offset, length), f"0{length}b")

    @property
    def generated(self) -> int:
        """Number of digits currently materialized past this key's offset."""
        return self._stream.nbits - self.offset

    def value(self, depth: int = 53) -> float:
        """Float approximation from the first ``depth`` digits."""
        return int(self.prefix(depth), 2) / 2.0**depth

    def shares_stream(self, other: "BitKey") -> bool:
        return self._stream is other._stream

    def __repr__(self) -> str:
        shown = min(self.generated, 16)
        return f"BitKey(.{self.prefix(shown)}...)"


def first_diff_index(x: BitKey, y: BitKey) -> int:
    """Index of the first digit where ``x`` and ``y`` differ, extending both as needed."""
    cap = min(x.depth_cap, y.depth_cap)
    pos = 0
    while True:
        length = CHUNK
        room = min(cap - x.offset, cap - y.offset) - pos
        if room <= 0:
            raise DepthCapExceeded(cap)
        length = min(length, room)
        x._stream.extend_to(x.offset + pos + length, x.depth_cap)
        y._stream.extend_to(y.offset + pos + length, y.depth_cap)
        d = x._stream.window(x.offset + pos, length) ^ y._stream.window(y.offset + pos, length)
        if d:
            return pos + length - d.bit_length() + 1
        pos += length


def compare_with_cost(x: BitKey, y: BitKey) -> tuple[Ordering, int]:
    """Order of ``x`` relative to ``y`` together with the number of digits compared."""
    b = first_diff_index(x, y)
    return (Ordering.GREATER if x.bit(b) else Ordering.LESS), b


def rotate_left(x: BitKey, m: int) -> BitKey:
    """Drop the first ``m`` digits.  The result shares ``x``'s stream; ``x`` is untouched."""
    if m < 0:
        raise ValueError("rotation must be nonnegative")
    if m:
        x._stream.extend_to(x.offset + m, x.depth_cap)
    return BitKey(x._stream, x.offset + m, x.depth_cap)


def rotate_right(x: BitKey, m: int) -> BitKey:
    """Undo ``rotate_left(., m)``: the dropped prefix is recovered from the shared stream."""
    if m > x.offset:
        raise ValueError("cannot restore more digits than were dropped")
    return BitKey(x._stream, x.offset - m, x.depth_cap)


def sample_uniform_key(rng: np.random.Generator, depth_cap: int = DEFAULT_DEPTH_CAP) -> BitKey:
    """Uniform(0, 1) key.  Each key gets its own spawned generator so its digits
    do not depend on the order in which keys are extended."""
    return BitKey.from_source(FairBits(rng.spawn(1)[0]), depth_cap=depth_cap)


def key_from_literal(text: str, rng: np.random.Generator | None = None,
                     depth_cap: int = DEFAULT_DEPTH_CAP) -> BitKey:
    """Parse a fixture literal such as ``"0110"`` or ``"0110..."``.

    A plain literal is followed by zeros (terminating expansion).  A trailing
    ``"..."`` continues with fair random bits drawn from ``rng``.
    """
    digits = text[:-3] if text.endswith("...") else text
    if any(c not in "01" for c in digits):
        raise ValueError(f"bad key literal {text!r}")
    if text.endswith("..."):
        if rng is None:
            raise ValueError("a random tail needs an rng")
        source = FairBits(rng.spawn(1)[0])
    else:
        source = ConstantTail(0)
    return BitKey.from_source(source, digits, depth_cap)


def endpoint_zero(depth_cap: int = DEFAULT_DEPTH_CAP) -> BitKey:
    return BitKey.from_source(ConstantTail(0), depth_cap=depth_cap)


def endpoint_one(depth_cap: int = DEFAULT_DEPTH_CAP) -> BitKey:
    """The key 1 = .111..., the only non-terminating expansion used."""
    return BitKey.from_source(ConstantTail(1), depth_cap=depth_cap)


def key_from_words(words, depth_cap: int = DEFAULT_DEPTH_CAP, tail=None) -> BitKey:
    """Key whose first digits are the given 64-bit words (most significant first).

    ``tail`` supplies further digits; by default the expansion terminates.
    Used to feed identical inputs to the reference sorters and the fast kernels.
    """
    word = 0
    for w in words:
        word = (word << 64) | int(w)
    stream = _Stream(word, 64 * len(words), tail if tail is not None else ConstantTail(0))
    return BitKey(stream, 0, depth_cap)
