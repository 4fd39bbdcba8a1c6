from fractions import Fraction
from math import comb

import mpmath
import pytest

from gseed.series import (
    ComplexApprox,
    ConvergenceError,
    Evaluator,
    InconsistentInitialData,
    SeriesError,
    default_alpha,
    eval_shifted,
    eval_theta_power,
    make_spec,
    radius_lower_bound,
    stabilized_sum,
)

BITS = 128
TOL = mpmath.mpf(10) ** -33


def close(a, b, tol=TOL):
    with mpmath.workprec(160):
        return abs(a - b) <= tol * max(1, abs(b))


def test_apery_coefficients_match_binomial_sum(apery):
    A = apery.coefficients(30)
    for n in range(31):
        assert A[n] == sum(comb(n, k) ** 2 * comb(n + k, k) ** 2 for k in range(n + 1))


def test_central_delannoy(specs):
    A = specs["sqrt6"].coefficients(25)
    for n in range(26):
        assert A[n] == sum(comb(n, k) * comb(n + k, k) for k in range(n + 1))


def test_catalan_scaled(specs):
    A = specs["catalan"].coefficients(25)
    for n in range(26):
        assert A[n] == Fraction(comb(2 * n, n), (n + 1) * 4**n)


def test_halflog2_and_chi_coefficients(specs):
    assert [str(x) for x in specs["halflog2"].coefficients(6)] == ["0", "0", "1/2", "1/2", "11/24", "5/12", "137/360"]
    chi = {0: 0, 1: 1, 2: 0, 3: -1}
    A = specs["chi4"].coefficients(40)
    assert all(A[k] == Fraction(chi[k % 4], k * k) for k in range(1, 41))


def test_recurrence_residuals_vanish(specs):
    for spec in specs.values():
        assert all(r == 0 for r in spec.recurrence_residuals(60))


def test_initial_data_checks():
    # A_0 must be given when 0 is an exponent at the origin
    with pytest.raises(SeriesError):
        make_spec("(1-z)*D - 1", [])
    # Q_0 has the root 1 here, so A_1 is free but must be supplied
    with pytest.raises(SeriesError):
        make_spec("z^2*(1-34*z+z^2)*D^3 + z*(3-153*z+6*z^2)*D^2 + (1-112*z+7*z^2)*D + (z-5)", ["1/2", "1", "1", "1"])


def test_inconsistent_initial_data():
    with pytest.raises(InconsistentInitialData):
        make_spec("(1-z)*D - 1", [1, 2])


def test_radius_and_default_alpha(specs, apery):
    R, sing = radius_lower_bound(apery)
    with mpmath.workprec(200):
        assert abs(R - (17 - 12 * mpmath.sqrt(2))) < 1e-30
    assert len(sing) == 2
    assert default_alpha(apery) == Fraction(7, 500)
    assert default_alpha(specs["geometric"]) == Fraction(1, 2)
    assert default_alpha(specs["sqrt6"]) == Fraction(17, 200)


def test_geometric_values_against_polylog(geo):
    with mpmath.workprec(200):
        z = mpmath.mpf(1) / 2
        for s in range(1, 5):
            for n in range(1, 6):
                want = mpmath.polylog(s, z) - sum(z**m / mpmath.mpf(m) ** s for m in range(1, n))
                assert close(eval_shifted(geo, n, s, Fraction(1, 2), BITS).value, want)
        for j in range(1, 4):
            assert close(eval_theta_power(geo, j, Fraction(1, 2), BITS).value, mpmath.polylog(-j, z))
        assert close(eval_theta_power(geo, 0, Fraction(1, 2), BITS).value, 2)


@pytest.mark.parametrize(
    "name,alpha,closed",
    [
        ("neglog", Fraction(1, 2), lambda z: -mpmath.log(1 - z)),
        ("catalan", Fraction(1, 2), lambda z: 2 * (1 - mpmath.sqrt(1 - z)) / z),
        ("sqrt6", Fraction(17, 200), lambda z: 1 / mpmath.sqrt(1 - 6 * z + z * z)),
        ("halflog2", Fraction(1, 2), lambda z: mpmath.log(1 - z) ** 2 / 2),
        ("chi4", Fraction(1, 2), lambda z: mpmath.im(mpmath.polylog(2, 1j * z))),
    ],
)
def test_values_against_closed_forms(specs, name, alpha, closed):
    with mpmath.workprec(200):
        want = closed(mpmath.mpf(alpha.numerator) / alpha.denominator)
    assert close(eval_theta_power(specs[name], 0, alpha, BITS).value, want)


def test_dilog_half(specs):
    # F_1^[1] of -log(1-z) is Li_2
    with mpmath.workprec(200):
        want = mpmath.polylog(2, mpmath.mpf(1) / 2)
    with mpmath.workprec(200):
        assert close(eval_shifted(specs["neglog"], 1, 0, Fraction(1, 2), BITS).value, mpmath.log(2) / 2)
    got = eval_shifted(specs["geometric"], 1, 2, Fraction(1, 2), BITS).value
    assert close(got, want)


def test_evaluation_outside_disk_rejected(geo):
    with pytest.raises(ConvergenceError):
        eval_shifted(geo, 1, 1, 1, BITS)
    with pytest.raises(ConvergenceError):
        Evaluator(geo, 0, BITS)


def test_weight_zero_needs_no_shift(geo):
    with pytest.raises(SeriesError):
        eval_shifted(geo, 0, 1, Fraction(1, 2))


def test_evaluator_memoizes(geo):
    ev = Evaluator(geo, Fraction(1, 3), BITS)
    assert ev.shifted(2, 2) is ev.shifted(2, 2)
    assert ev.theta(1) is ev.theta(1)


def test_stabilized_sum_reports_tail():
    terms = (mpmath.mpf(1) / 2**k for k in range(10**6))
    with mpmath.workprec(160):
        val, tail, count = stabilized_sum(terms, 128)
    assert abs(val - 2) < mpmath.mpf(2) ** -110 and tail >= 0 and count <= 1024


def test_complex_approx_validation():
    with pytest.raises(ValueError):
        ComplexApprox(mpmath.mpf(1), 32, mpmath.mpf(0))
    with pytest.raises(ValueError):
        ComplexApprox(mpmath.mpf(1), 64, mpmath.mpf(-1))


def test_precision_scaling(geo):
    # doubling the precision agrees with the lower-precision value to its accuracy
    lo = eval_shifted(geo, 3, 2, Fraction(1, 2), 128).value
    hi = eval_shifted(geo, 3, 2, Fraction(1, 2), 256).value
    assert abs(lo - hi) < mpmath.mpf(2) ** -120
