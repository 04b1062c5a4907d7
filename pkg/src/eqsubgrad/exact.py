"""Exact rational arithmetic with directed-rounding root enclosures.

Certified bound computations run over ``fractions.Fraction``.  The only
irrational steps (square roots and fourth roots) are replaced by rational
interval enclosures ``[lo, hi]`` with ``lo <= root <= hi``, computed from
integer square roots at a configurable bit precision.  Consumers round in
the direction that can only enlarge the final bound, so every output is a
valid upper bound and tightening an enclosure never increases it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import InvalidConfig

DEFAULT_BITS = 128

# Hard ceiling on refinement precision when a ceil/floor stays undecided.
MAX_REFINE_BITS = 1 << 14


def parse_fraction(text) -> Fraction:
    """Parse 'p/q', 'p', or an int into an exact Fraction."""
    if isinstance(text, Rational):
        return Fraction(text)
    if not isinstance(text, str):
        raise InvalidConfig(f"expected a rational string like 'p/q', got {text!r}")
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidConfig(f"not a valid rational: {text!r} ({exc})") from exc


def format_fraction(x: Fraction) -> str:
    return str(x)


def decimal_digits(n: int) -> int:
    """Number of decimal digits of a nonnegative integer, str()-free.

    Works for integers far beyond the interpreter's int->str conversion
    limit: locate the decimal magnitude by comparing against powers of ten.
    """
    if n < 0:
        raise ValueError("decimal_digits expects a nonnegative integer")
    if n < 10:
        return 1
    # floor(log10(n)) is within 1 of (bit_length-1)*log10(2)
    est = int((n.bit_length() - 1) * 0.30102999566398114)
    while 10 ** (est + 1) <= n:
        est += 1
    while 10 ** est > n:
        est -= 1
    return est + 1


def sqrt_enclosure(x: Fraction, bits: int = DEFAULT_BITS) -> "Enclosure":
    """Rational enclosure of sqrt(x) for x >= 0, exact when x is a square.

    sqrt(p/q) = sqrt(p*q)/q; isqrt of p*q*4^bits gives directed bounds of
    width at most 1/(q*2^bits).
    """
    if x < 0:
        raise ValueError("sqrt of a negative rational")
    if x == 0:
        return Enclosure(Fraction(0), Fraction(0))
    p, q = x.numerator, x.denominator
    m = p * q << (2 * bits)
    s = math.isqrt(m)
    den = q << bits
    lo = Fraction(s, den)
    if s * s == m:
        return Enclosure(lo, lo)
    return Enclosure(lo, Fraction(s + 1, den))


@dataclass(frozen=True)
class Enclosure:
    """Closed rational interval [lo, hi] certified to contain a real value.

    Arithmetic is restricted to the nonnegative operands the bound
    formulas produce; multiplication and division assert nonnegativity so
    a sign slip cannot silently flip the rounding direction.
    """

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty enclosure [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, value) -> "Enclosure":
        v = Fraction(value)
        return cls(v, v)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def _coerce(self, other) -> "Enclosure":
        if isinstance(other, Enclosure):
            return other
        return Enclosure.point(other)

    def __add__(self, other) -> "Enclosure":
        o = self._coerce(other)
        return Enclosure(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __mul__(self, other) -> "Enclosure":
        o = self._coerce(other)
        if self.lo < 0 or o.lo < 0:
            raise ValueError("enclosure product defined here for nonnegative operands only")
        return Enclosure(self.lo * o.lo, self.hi * o.hi)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Enclosure":
        o = self._coerce(other)
        if self.lo < 0 or o.lo <= 0:
            raise ValueError("enclosure quotient needs nonnegative numerator, positive denominator")
        return Enclosure(self.lo / o.hi, self.hi / o.lo)

    def power(self, exponent: int) -> "Enclosure":
        if self.lo < 0:
            raise ValueError("enclosure power defined here for nonnegative base only")
        if exponent < 0:
            raise ValueError("nonnegative exponents only")
        return Enclosure(self.lo ** exponent, self.hi ** exponent)

    def sqrt(self, bits: int = DEFAULT_BITS) -> "Enclosure":
        return Enclosure(
            sqrt_enclosure(self.lo, bits).lo,
            sqrt_enclosure(self.hi, bits).hi,
        )

    def fourth_root(self, bits: int = DEFAULT_BITS) -> "Enclosure":
        return self.sqrt(bits).sqrt(bits)

    def ceil_decided(self) -> tuple[int, bool]:
        """(ceil, decided): decided when both endpoints agree on the ceiling.

        An undecided ceiling rounds up (uses the upper endpoint), which is
        sound because every downstream bound is nondecreasing in it.
        """
        c_lo, c_hi = math.ceil(self.lo), math.ceil(self.hi)
        return c_hi, c_lo == c_hi

    def floor_up(self) -> int:
        """Floor of the upper endpoint (sound for nondecreasing consumers)."""
        return math.floor(self.hi)


def refined_ceil(make: "callable", bits: int) -> int:
    """Ceiling of an enclosure-valued expression, refined until decided.

    ``make(bits)`` must rebuild the enclosure at the given precision.
    Doubles the precision while the ceiling is undecided; past the
    refinement cap the undecided ceiling rounds up.
    """
    b = bits
    while True:
        value, decided = make(b).ceil_decided()
        if decided or b >= MAX_REFINE_BITS:
            return value
        b *= 2
