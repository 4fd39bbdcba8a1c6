import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gseed.criterion import (
    CriterionError,
    certify,
    default_r,
    dimension_bound,
    dimension_bound_log,
    shift_select,
    vandermonde,
)


def test_shift_select_trivial():
    choice = shift_select([1], [1], 7)
    assert choice.delta == 0 and choice.holds and abs(choice.value - 1) < 1e-30


def test_shift_select_two_roots():
    for n in range(6):
        choice = shift_select([1, 1], [1, -1], n)
        assert choice.delta == n % 2 and choice.holds
        assert abs(choice.bound - 1) < 1e-30


def test_vandermonde():
    assert abs(vandermonde([1, -1]) + 2) < 1e-30
    assert abs(vandermonde([1, 2, 3]) - 2) < 1e-30


def test_shift_select_argument_checks():
    with pytest.raises(CriterionError):
        shift_select([1, 0], [1, -1], 0)
    with pytest.raises(CriterionError):
        shift_select([1], [1, -1], 0)


def _unimodular(rng, T):
    angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(T))
    return [mpmath.expj(a) for a in angles]


def test_shift_select_random():
    rng = random.Random(7)
    for _ in range(200):
        T = rng.randint(1, 4)
        zeta = _unimodular(rng, T)
        c = [mpmath.mpc(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(T)]
        choice = shift_select(c, zeta, rng.randint(0, 500))
        assert choice.holds and choice.delta < T


def test_dimension_bound_examples():
    assert dimension_bound(Fraction(1, 4), 4).value == pytest.approx(2.0, abs=1e-15)
    assert dimension_bound(Fraction(1, 8), 2, 2).value == pytest.approx(2.0, abs=1e-15)
    assert dimension_bound(Fraction(1, 4), 4).count == 3


@settings(max_examples=200)
@given(st.floats(1e-6, 0.999), st.floats(1.001, 1e6), st.integers(1, 7), st.integers(1, 3))
def test_dimension_bound_scale_invariance(a0, b, k, degree):
    base = dimension_bound(a0, b, degree).value
    scaled = dimension_bound(a0**k, b**k, degree).value
    assert abs(base - scaled) <= 1e-12 * max(1, abs(base))
    scaled = dimension_bound_log(k * math.log(a0), k * math.log(b), degree).value
    assert abs(base - scaled) <= 1e-12 * max(1, abs(base))


def test_dimension_bound_ordering():
    with pytest.raises(CriterionError):
        dimension_bound(2, 4)
    with pytest.raises(CriterionError):
        dimension_bound(Fraction(1, 2), Fraction(1, 2))
    with pytest.raises(CriterionError):
        dimension_bound(Fraction(1, 2), 4, 0)


def test_default_r():
    assert default_r(1) == 0
    assert default_r(6) == 1
    assert default_r(40) == 2


def test_certificate_is_deterministic_and_heuristic(geo):
    a = certify(geo, Fraction(1, 2), 3, 1, (40, 62), 192)
    b = certify(geo, Fraction(1, 2), 3, 1, (40, 62), 192)
    assert a.to_document() == b.to_document()
    assert a.caveats and any("heuristic" in c for c in a.caveats)
    assert a.log_a0_emp < 0 < a.log_b_emp and a.bound is not None and a.bound > 1


def test_certificate_withheld_for_weight_one(geo):
    cert = certify(geo, Fraction(1, 2), 1, 0, (100, 130), 192)
    assert cert.bound is None
    assert abs(cert.log_a0_emp - 1) < 0.1
    assert "no bound" in cert.caveats[-1]


def test_certify_argument_checks(geo):
    with pytest.raises(CriterionError):
        certify(geo, Fraction(1, 2), 3, 1, (40, 50))
    with pytest.raises(CriterionError):
        certify(geo, Fraction(3, 2), 3, 1, (40, 70))
    with pytest.raises(CriterionError):
        certify(geo, Fraction(1, 2), 3, 4, (40, 70))
