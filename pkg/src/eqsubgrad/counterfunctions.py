"""Monotone counterfunctions g(n) = slope*n + offset over the naturals.

The family (constants, slope = 0, and affine maps with natural
coefficients) is closed under every transform the bound calculators
apply: g + 1, the shifted successor n -> g(n+1) + 1, and iteration of
the associated expansion map n -> n + g(n), which has an exact closed
form so iterates never need to be unrolled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidConfig, SizeOverflow
from .exact import decimal_digits

_LOG10_2 = math.log10(2)


@dataclass(frozen=True)
class Counterfunction:
    """g(n) = slope*n + offset with natural slope and offset."""

    slope: int
    offset: int

    def __post_init__(self):
        for name, v in (("slope", self.slope), ("offset", self.offset)):
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise InvalidConfig(f"counterfunction {name} must be a natural number, got {v!r}")

    @property
    def family(self) -> str:
        return "constant" if self.slope == 0 else "affine"

    def __call__(self, n: int) -> int:
        if n < 0:
            raise ValueError("counterfunctions are defined on naturals")
        return self.slope * n + self.offset

    def plus_one(self) -> "Counterfunction":
        """g + 1."""
        return Counterfunction(self.slope, self.offset + 1)

    def shifted_successor(self) -> "Counterfunction":
        """n -> g(n+1) + 1."""
        return Counterfunction(self.slope, self.slope + self.offset + 1)

    def expansion(self, n: int) -> int:
        """n + g(n), the strictly increasing expansion map."""
        return n + self(n)

    def expansion_iterate(self, count: int, start: int, digit_budget: int | None = None) -> int:
        """count-fold iterate of n -> n + g(n) from start, in closed form.

        With q = slope + 1 the iterate is q^count * start plus the
        geometric sum of offsets; exact over big integers.  digit_budget
        rejects results whose decimal size would exceed the budget.
        """
        if count < 0 or start < 0:
            raise ValueError("expansion_iterate needs natural count and start")
        q = self.slope + 1
        if q >= 2 and (start or self.offset):
            # result >= q**(count-1): no budget makes 10^18+ digits storable
            if count > 10 ** 18:
                raise SizeOverflow(
                    f"expansion iterate of growth factor {q} cannot run "
                    f"{count} steps")
            if digit_budget is not None and count * math.log10(q) > digit_budget + 16:
                raise SizeOverflow(
                    f"expansion iterate needs about {count} doublings, "
                    f"past the {digit_budget}-digit budget"
                )
        if q == 1:
            value = start + count * self.offset
        else:
            pw = q ** count
            value = pw * start + self.offset * (pw - 1) // self.slope
        # the log10 pre-check above carries slack; this one is exact
        if digit_budget is not None and decimal_digits(value) > digit_budget:
            raise SizeOverflow(
                f"expansion iterate has {decimal_digits(value)} digits, "
                f"past the {digit_budget}-digit budget")
        return value

    # --- config plumbing -------------------------------------------------

    def to_config(self) -> dict:
        if self.slope == 0:
            return {"family": "constant", "c": self.offset}
        return {"family": "affine", "p": self.slope, "c": self.offset}

    @classmethod
    def from_config(cls, cfg: dict) -> "Counterfunction":
        if not isinstance(cfg, dict) or "family" not in cfg:
            raise InvalidConfig(f"counterfunction config needs a 'family' key: {cfg!r}")
        fam = cfg["family"]
        if fam == "constant":
            return cls(0, _as_natural(cfg.get("c", 0)))
        if fam == "affine":
            return cls(_as_natural(cfg.get("p", 1)), _as_natural(cfg.get("c", 0)))
        raise InvalidConfig(f"unknown counterfunction family {fam!r}")

    @classmethod
    def parse(cls, text: str) -> "Counterfunction":
        """Parse 'constant:c' or 'affine:p,c' (also 'affine:p' with c=0)."""
        try:
            fam, _, args = text.partition(":")
            fam = fam.strip().lower()
            if fam == "constant":
                return cls(0, int(args))
            if fam == "affine":
                parts = [int(p) for p in args.split(",")] if args else [1]
                if len(parts) == 1:
                    parts.append(0)
                if len(parts) != 2:
                    raise ValueError("affine takes p,c")
                return cls(parts[0], parts[1])
        except (ValueError, TypeError) as exc:
            raise InvalidConfig(f"cannot parse counterfunction {text!r}: {exc}") from exc
        raise InvalidConfig(f"unknown counterfunction family in {text!r}")

    def describe(self) -> str:
        if self.slope == 0:
            return f"constant:{self.offset}"
        return f"affine:{self.slope},{self.offset}"


def constant(c: int) -> Counterfunction:
    return Counterfunction(0, c)


def affine(p: int, c: int = 0) -> Counterfunction:
    return Counterfunction(p, c)


def _as_natural(v) -> int:
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise InvalidConfig(f"expected a natural number, got {v!r}")
    return v


def pointwise_leq(g1: Counterfunction, g2: Counterfunction) -> bool:
    """g1(n) <= g2(n) for all naturals n (affine: compare both coefficients)."""
    return g1.slope <= g2.slope and g1.offset <= g2.offset
