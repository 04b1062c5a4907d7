"""Rational parsing, digit counting, and directed-rounding root enclosures.

Oracle strategy: perfect squares give exactly representable roots, so the
enclosure must collapse to a point there; for non-squares we check the
defining property lo^2 <= x <= hi^2 directly instead of trusting any
derived value.
"""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqsubgrad.errors import InvalidConfig
from eqsubgrad.exact import (Enclosure, decimal_digits, parse_fraction,
                             refined_ceil, sqrt_enclosure)


# --- parse_fraction ------------------------------------------------------------


def test_parse_fraction_strings():
    assert parse_fraction("3/4") == Fraction(3, 4)
    assert parse_fraction("7") == Fraction(7)
    assert parse_fraction(" -2/5 ") == Fraction(-2, 5)


def test_parse_fraction_passthrough():
    assert parse_fraction(5) == Fraction(5)
    assert parse_fraction(Fraction(1, 3)) == Fraction(1, 3)


@pytest.mark.parametrize("bad", ["1/0", "abc", "1.5.2", None, 0.5, [1]])
def test_parse_fraction_rejects(bad):
    with pytest.raises(InvalidConfig):
        parse_fraction(bad)


# --- decimal_digits ------------------------------------------------------------


@pytest.mark.parametrize("n,d", [(0, 1), (9, 1), (10, 2), (99, 2), (100, 3),
                                 (10 ** 17 - 1, 17), (10 ** 17, 18)])
def test_decimal_digits_small(n, d):
    assert decimal_digits(n) == d


def test_decimal_digits_beyond_str_limit():
    # int -> str conversion is capped around 4300 digits on this interpreter;
    # the bit-length route must not care
    n = 10 ** 50000
    assert decimal_digits(n) == 50001
    assert decimal_digits(n - 1) == 50000


@given(st.integers(min_value=0, max_value=10 ** 400))
def test_decimal_digits_matches_str(n):
    assert decimal_digits(n) == len(str(n))


def test_decimal_digits_rejects_negative():
    with pytest.raises(ValueError):
        decimal_digits(-1)


# --- sqrt enclosures -----------------------------------------------------------


@pytest.mark.parametrize("x,root", [(0, 0), (1, 1), (4, 2), (Fraction(9, 4), Fraction(3, 2)),
                                    (Fraction(1, 16), Fraction(1, 4))])
def test_sqrt_exact_on_squares(x, root):
    enc = sqrt_enclosure(Fraction(x), 64)
    assert enc.is_point
    assert enc.lo == root


def test_sqrt_two_bracket():
    enc = sqrt_enclosure(Fraction(2), 128)
    assert enc.lo ** 2 <= 2 <= enc.hi ** 2
    assert not enc.is_point
    assert enc.hi - enc.lo <= Fraction(1, 2 ** 120)


@given(st.fractions(min_value=0, max_value=10 ** 6),
       st.integers(min_value=8, max_value=256))
@settings(max_examples=150)
def test_sqrt_enclosure_brackets(x, bits):
    enc = sqrt_enclosure(x, bits)
    assert enc.lo >= 0
    assert enc.lo ** 2 <= x <= enc.hi ** 2
    assert enc.hi - enc.lo <= Fraction(1, 2 ** (bits - 1))


@given(st.fractions(min_value=0, max_value=10 ** 4))
def test_sqrt_enclosure_tightens(x):
    wide = sqrt_enclosure(x, 16)
    tight = sqrt_enclosure(x, 64)
    assert wide.lo <= tight.lo
    assert tight.hi <= wide.hi


def test_sqrt_rejects_negative():
    with pytest.raises(ValueError):
        sqrt_enclosure(Fraction(-1), 32)


# --- enclosure arithmetic --------------------------------------------------------


def test_enclosure_point_and_width():
    p = Enclosure.point(Fraction(3, 7))
    assert p.is_point and p.width == 0


def test_enclosure_add_mul():
    a = Enclosure(Fraction(1), Fraction(2))
    b = Enclosure(Fraction(3), Fraction(4))
    s = a + b
    assert (s.lo, s.hi) == (4, 6)
    m = a * b
    assert (m.lo, m.hi) == (3, 8)
    shifted = a + 1
    assert (shifted.lo, shifted.hi) == (2, 3)


def test_enclosure_power_and_division():
    a = Enclosure(Fraction(2), Fraction(3))
    p = a.power(2)
    assert (p.lo, p.hi) == (4, 9)
    d = Enclosure(Fraction(8), Fraction(8)) / Enclosure(Fraction(2), Fraction(4))
    assert (d.lo, d.hi) == (2, 4)


def test_enclosure_fourth_root():
    r = Enclosure.point(Fraction(81)).fourth_root(64)
    assert r.lo == 3 and r.is_point
    r2 = Enclosure.point(Fraction(5)).fourth_root(96)
    assert r2.lo ** 4 <= 5 <= r2.hi ** 4


def test_ceil_decided_and_floor():
    assert Enclosure(Fraction(3, 2), Fraction(8, 5)).ceil_decided() == (2, True)
    # straddles an integer: undecided, rounded up
    val, decided = Enclosure(Fraction(19, 10), Fraction(21, 10)).ceil_decided()
    assert val == 3 and not decided
    assert Enclosure(Fraction(3, 2), Fraction(8, 5)).floor_up() == 1
    assert Enclosure(Fraction(19, 10), Fraction(21, 10)).floor_up() == 2


def test_refined_ceil_resolves():
    # ceil(sqrt(2) + 1/2) = 2; coarse bits straddle nothing here, but force
    # the refinement path with a nearly-integral target: ceil(sqrt(4)) = 2
    assert refined_ceil(lambda b: sqrt_enclosure(Fraction(2), b) + Fraction(1, 2), 8) == 2
    assert refined_ceil(lambda b: sqrt_enclosure(Fraction(4), b), 8) == 2


@given(st.fractions(min_value=Fraction(1, 100), max_value=100),
       st.fractions(min_value=Fraction(1, 100), max_value=100))
@settings(max_examples=100)
def test_mul_contains_products(x, y):
    ex = sqrt_enclosure(x, 32)
    ey = sqrt_enclosure(y, 32)
    prod = ex * ey
    true_sq = x * y
    assert prod.lo ** 2 <= true_sq <= prod.hi ** 2


def test_float_sqrt_agreement():
    # the enclosure must bracket the IEEE double result for benign inputs
    for v in (2, 3, 5, 10, 1234, Fraction(7, 3)):
        enc = sqrt_enclosure(Fraction(v), 80)
        f = math.sqrt(float(v))
        assert float(enc.lo) <= f + 1e-12
        assert f - 1e-12 <= float(enc.hi)
