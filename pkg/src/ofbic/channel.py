"""Bit-exact GF(2) model of the two-hop interference network.

Conventions used across the whole package:

* A link of strength ``k`` delivers the top ``k`` levels of the transmitted
  vector, bottom-aligned at the receiver (lower-shift matrix model).
* Level index 0 is the top (most significant) level.  This is the paper-style
  "level 1" of the figures, shifted to 0-based indexing.
* Hop-1 vectors have length ``q = max(m, n)``; hop-2 vectors have length
  ``qbar = max(mbar, nbar, f)``.

All operations are pure functions on immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


class ChannelDomainError(ValueError):
    """Vector lengths or link parameters outside the model's domain."""


@dataclass(frozen=True)
class ChannelParams:
    """The five link strengths (bits per channel use).

    m / n: hop-1 cross and direct links (source -> relay).
    mbar / nbar: backward cross and direct links (relay -> source).
    f: forward link of the second hop (relay -> destination).
    """

    m: int
    n: int
    mbar: int
    nbar: int
    f: int

    def __post_init__(self) -> None:
        for name in ("m", "n", "mbar", "nbar", "f"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ChannelDomainError(
                    f"{name} must be a non-negative integer, got {value!r}"
                )

    @property
    def q(self) -> int:
        """Hop-1 vector length."""
        return max(self.m, self.n)

    @property
    def qbar(self) -> int:
        """Hop-2 vector length."""
        return max(self.mbar, self.nbar, self.f)

    @property
    def alpha(self):
        """Interference ratio m/n.

        Exact Fraction for n > 0, ``math.inf`` for n = 0 < m, and None for
        the degenerate m = n = 0 channel.
        """
        if self.n > 0:
            return Fraction(self.m, self.n)
        return math.inf if self.m > 0 else None

    def short(self) -> str:
        return (
            f"m={self.m} n={self.n} mbar={self.mbar} "
            f"nbar={self.nbar} f={self.f}"
        )


class GfVec(tuple):
    """Fixed-length binary column vector over GF(2).

    Immutable value type; arithmetic is componentwise XOR and requires equal
    lengths.  Index 0 is the top level.
    """

    def __new__(cls, bits=()):
        vec = super().__new__(cls, tuple(int(b) for b in bits))
        if any(b not in (0, 1) for b in vec):
            raise ChannelDomainError("GfVec levels must be 0 or 1")
        return vec

    @classmethod
    def zeros(cls, length: int) -> "GfVec":
        if length < 0:
            raise ChannelDomainError("length must be non-negative")
        return cls((0,) * length)

    @classmethod
    def from_string(cls, text: str) -> "GfVec":
        """Parse the trace encoding: '0'/'1' top-first, '-' for empty."""
        if text == "-":
            return cls()
        if not all(c in "01" for c in text):
            raise ChannelDomainError(f"bad vector string {text!r}")
        return cls(int(c) for c in text)

    def __xor__(self, other):
        if not isinstance(other, tuple) or len(other) != len(self):
            raise ChannelDomainError("XOR requires equal-length vectors")
        return GfVec(a ^ b for a, b in zip(self, other))

    def flip(self, level: int) -> "GfVec":
        """Copy with one level inverted (fault injection helper)."""
        if not 0 <= level < len(self):
            raise ChannelDomainError(f"level {level} outside vector")
        return GfVec(b ^ 1 if i == level else b for i, b in enumerate(self))

    def __str__(self) -> str:
        return "".join(str(b) for b in self) or "-"

    def __repr__(self) -> str:
        return f"GfVec({str(self)!r})"


def shift(x: GfVec, k: int) -> GfVec:
    """Multiply by the lower-shift matrix S^(L-k).

    The top k levels of ``x`` survive, in order, bottom-aligned; everything
    above them is zero.  ``k = L`` is the identity, ``k = 0`` the zero map.
    """
    length = len(x)
    if not 0 <= k <= length:
        raise ChannelDomainError(f"shift amount {k} outside [0, {length}]")
    return GfVec((0,) * (length - k) + tuple(x[:k]))


def first_hop(x_s1: GfVec, x_s2: GfVec, p: ChannelParams):
    """Hop-1 superposition: returns (y_r1, y_r2).

    y_r1 = shift(x_s1, n) + shift(x_s2, m) and symmetrically for y_r2.
    """
    q = p.q
    if len(x_s1) != q or len(x_s2) != q:
        raise ChannelDomainError(f"hop-1 inputs must have length q={q}")
    y_r1 = shift(x_s1, p.n) ^ shift(x_s2, p.m)
    y_r2 = shift(x_s1, p.m) ^ shift(x_s2, p.n)
    return y_r1, y_r2


def second_hop(x_r1: GfVec, x_r2: GfVec, p: ChannelParams):
    """Hop-2 broadcast: returns (y_d1, y_d2, y_s1, y_s2).

    Each destination sees only its own relay through the f-link; each source
    overhears both relays through the backward interference channel.
    """
    qbar = p.qbar
    if len(x_r1) != qbar or len(x_r2) != qbar:
        raise ChannelDomainError(f"hop-2 inputs must have length qbar={qbar}")
    y_d1 = shift(x_r1, p.f)
    y_d2 = shift(x_r2, p.f)
    y_s1 = shift(x_r1, p.nbar) ^ shift(x_r2, p.mbar)
    y_s2 = shift(x_r2, p.nbar) ^ shift(x_r1, p.mbar)
    return y_d1, y_d2, y_s1, y_s2
