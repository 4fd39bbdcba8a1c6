from fractions import Fraction

import mpmath
import pytest

from gseed.decomposition import (
    DecompositionError,
    cumulative_denominator,
    decompose,
    growth_profile,
    recurrence_consistency,
    verify_decomposition,
)
from gseed.poly import Poly
from gseed.series import Evaluator, default_alpha


def geometric_q(n, s):
    # F_n^[s] = F_1^[s] - sum_(m<n) z^m/m^s and z^m = z^m (1-z) F
    tail = Poly([0] + [Fraction(1, m**s) for m in range(1, n)])
    return -(tail * Poly([1, -1]))


def test_geometric_records_match_closed_form(geo):
    for s in range(1, 5):
        for n in range(1, 13):
            rec = decompose(geo, n, s)
            assert rec.p == {(1, s): 1}
            assert rec.q == (geometric_q(n, s),)


def test_frozen_records(geo):
    assert decompose(geo, 2, 1).q[0].to_strings() == ["0", "-1", "1"]
    assert decompose(geo, 5, 3).q[0].to_strings() == ["0", "-1", "7/8", "19/216", "37/1728", "1/64"]


def test_records_below_ell0_are_trivial(apery):
    rec = decompose(apery, 2, 3)
    assert rec.p == {(2, 3): 1}
    assert all(q.is_zero() for q in rec.q)
    assert rec.m_used == apery.exponents.m_min


@pytest.mark.parametrize("name", ["neglog", "catalan", "sqrt6", "halflog2", "apery", "chi4"])
def test_numeric_identity(specs, name):
    spec = specs[name]
    alpha = default_alpha(spec)
    ev = Evaluator(spec, alpha, 128)
    for s in range(1, 4):
        for n in range(1, 9):
            assert verify_decomposition(spec, decompose(spec, n, s), alpha, 128, ev) < mpmath.mpf(10) ** -25


def test_point_mode_matches_polynomials(apery):
    alpha = Fraction(7, 500)
    for n, s in [(5, 1), (7, 2), (9, 3)]:
        rec = decompose(apery, n, s)
        at = decompose(apery, n, s, point=alpha)
        assert at.p == rec.p
        assert at.q == rec.at(alpha).q


def test_exact_recurrence_consistency(specs):
    for spec in specs.values():
        for s in (1, 2, 3):
            assert all(recurrence_consistency(spec, s, n) for n in range(1, 8))


def test_polynomial_degree_bound(specs):
    for spec in specs.values():
        for s in range(1, 5):
            for n in range(1, 16):
                assert decompose(spec, n, s).q_degree() <= n + s * (spec.tf.ell - 1)


def test_growth_profile_apery_baseline(apery):
    prof = growth_profile(apery, 2, 25)
    assert all(a <= b and b % a == 0 for a, b in zip(prof.D_emp, prof.D_emp[1:]))
    # regression baseline, not a proven value
    assert prof.D_emp[-1] == 273946952999942710884056044517253120000


def test_growth_profile_geometric(geo):
    prof = growth_profile(geo, 1, 30)
    assert prof.D_emp[:8] == (1, 1, 2, 6, 12, 60, 60, 420)
    assert abs(prof.D_rate[-1] - 2.58) < 0.01


def test_growth_profile_requires_length(geo):
    with pytest.raises(DecompositionError):
        growth_profile(geo, 1, 5)


def test_cumulative_denominator(geo):
    assert cumulative_denominator(geo, 2, 5) == 144


def test_point_record_misuse(geo):
    rec = decompose(geo, 3, 1, point=Fraction(1, 2))
    with pytest.raises(DecompositionError):
        rec.q_degree()
    with pytest.raises(DecompositionError):
        rec.at(Fraction(1, 3))
    with pytest.raises(DecompositionError):
        verify_decomposition(geo, rec, Fraction(1, 3))


def test_argument_checks(geo):
    with pytest.raises(DecompositionError):
        decompose(geo, 3, 0)
    with pytest.raises(DecompositionError):
        decompose(geo, 0, 1)


def test_record_document(geo):
    doc = decompose(geo, 3, 2).to_document()
    assert doc["p"] == [[1, 2, "1"]]
    assert doc["q"] == [["0", "-1", "3/4", "1/4"]]
