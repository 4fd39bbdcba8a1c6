from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gseed.poly import Poly, as_fraction, falling_factorial_poly, pochhammer_poly

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)
polys = st.lists(fractions, max_size=6).map(Poly)


def test_zero_polynomial_has_degree_minus_one():
    assert Poly().degree == -1
    assert Poly([0, 0]).is_zero()
    assert Poly([1, 2, 0]).degree == 1


def test_as_fraction_rejects_floats():
    with pytest.raises(TypeError):
        as_fraction(0.5)
    assert as_fraction("3/4") == Fraction(3, 4)


def test_falling_and_rising_factorials():
    assert falling_factorial_poly(3)(5) == 5 * 4 * 3
    assert pochhammer_poly(Fraction(1, 2), 3)(0) == Fraction(1, 2) * Fraction(3, 2) * Fraction(5, 2)


def test_string_round_trip():
    p = Poly([Fraction(1, 3), 0, -7])
    assert Poly.from_strings(p.to_strings()) == p


@given(polys, polys, polys)
def test_ring_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b) * c == a * (b * c)
    assert a - a == Poly()


@given(polys, fractions, fractions)
def test_shift_is_evaluation_shift(p, a, x):
    assert p.shift(a)(x) == p(x + a)


@given(polys, fractions.filter(lambda v: v != 0), fractions, fractions)
def test_compose_affine(p, a, b, x):
    assert p.compose_affine(a, b)(x) == p(a * x + b)


@settings(max_examples=50)
@given(polys, polys)
def test_product_rule(a, b):
    assert (a * b).derivative() == a.derivative() * b + a * b.derivative()


@given(polys, st.integers(0, 4))
def test_power_matches_repeated_product(p, e):
    q = Poly([1])
    for _ in range(e):
        q = q * p
    assert p**e == q
