from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gseed.asymptotics import (
    NegativeCoefficients,
    SaddleError,
    empirical_growth,
    fit_growth,
    fit_rate,
    nonneg_bounds,
    phi_data,
    predict_growth,
    real_integral_check,
    root_census,
    saddle_point,
    saddle_residual,
    saddle_seed,
    sandwich_rates,
)


def test_saddle_against_findroot():
    for S, r, z in [(20, 2, 0.5), (30, 2, -0.3), (5, 3, 0.7j), (8, 1, -0.9)]:
        tau = saddle_point(S, r, z)
        with mpmath.workprec(160):
            ref = mpmath.findroot(lambda t: z * t ** (S + 1) - (r - t) * (t + 1) ** S, mpmath.mpc(r))
        assert abs(tau - ref) < 1e-25
        assert tau.real > 0.5


def test_frozen_saddle_values():
    assert abs(saddle_point(20, 2, 0.5) - mpmath.mpf("1.99969961746087")) < 1e-13
    assert abs(saddle_point(30, 2, -0.3) - mpmath.mpf("2.00000312911088")) < 1e-13


def test_saddle_argument_checks():
    with pytest.raises(SaddleError):
        saddle_point(3, 0, 0.5)
    with pytest.raises(SaddleError):
        saddle_point(3, 2, 1.5)


def test_seed_approaches_root():
    gaps = []
    with mpmath.workprec(200):
        for S in (20, 40, 80):
            tau = saddle_point(S, 2, 0.5, 192)
            gaps.append(abs((tau - 2) / (saddle_seed(S, 2, mpmath.mpf(0.5)) - 2) - 1))
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-10


unit_disk = st.tuples(st.floats(0.05, 0.95), st.floats(-3.1, 3.1)).map(lambda p: mpmath.mpc(p[0] * mpmath.cos(p[1]), p[0] * mpmath.sin(p[1])))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.data(), unit_disk)
def test_root_census_property(S, data, z):
    r = data.draw(st.integers(1, S))
    assert root_census(S, r, z) == {"left": S, "right": 1, "middle": 0, "total": S + 1}
    tau = saddle_point(S, r, z)
    with mpmath.workprec(160):
        assert abs(saddle_residual(S, r, z, tau)) < 1e-25 * max(1, abs(tau) ** (S + 1))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 30), st.data(), unit_disk)
def test_three_expressions_agree(S, data, z):
    r = data.draw(st.integers(1, S - 1))
    pd = phi_data(S, r, z, saddle_point(S, r, z))
    assert pd.spread < 1e-25


def test_exp_phi_below_upper_rate():
    pd = phi_data(40, 3, 0.5, saddle_point(40, 3, 0.5))
    assert abs(pd.exp_phi) <= mpmath.mpf(3) ** -37


def test_predicted_growth(geo):
    rep = predict_growth(geo, 6, 1, Fraction(1, 2))
    assert abs(rep.log_a_pred - mpmath.mpf("-9.00297527")) < 1e-7
    assert rep.a_pred <= rep.upper and rep.dominant == [0]
    assert abs(predict_growth(geo, 3, 2, Fraction(1, 2)).log_a_pred - mpmath.mpf("-5.3742")) < 1e-4


def test_predicted_growth_apery_has_two_singularities(apery):
    rep = predict_growth(apery, 4, 2, Fraction(1, 100))
    assert len(rep.rho) == 2 and rep.a_pred <= rep.upper


def test_empirical_growth_small_window(geo):
    est = empirical_growth(geo, 2, 1, Fraction(1, 2), 40, 70, 256)
    pred = float(predict_growth(geo, 2, 1, Fraction(1, 2)).log_a_pred)
    assert abs(est.log_a_emp - pred) / abs(pred) < 1e-3


def test_fit_growth_recovers_synthetic_data():
    ns = np.arange(50, 120)
    y = -2.5 * ns + 1.5 * np.log(ns) - 0.7 * np.log(np.log(ns)) + 3.0
    la, kappa, lam, spread = fit_growth(ns, y)
    assert abs(la + 2.5) < 1e-8 and abs(kappa - 1.5) < 1e-6 and abs(lam + 0.7) < 1e-5 and spread < 1e-8
    assert abs(fit_rate(ns, -2.0 * ns + 4) + 2.0) < 1e-12


def test_sandwich_rates():
    lower, upper = sandwich_rates(3, 2, 2, 1)
    assert abs(lower - mpmath.mpf(1) / 4 * (mpmath.mpf(2) / 3) ** 6 / 3) < 1e-15
    assert upper == mpmath.mpf(1) / 2
    corrected, _ = sandwich_rates(3, 2, 2, 1, corrected=True)
    assert abs(corrected - lower * (mpmath.mpf(2) / 3) ** 2) < 1e-15


def test_corrected_sandwich_holds(geo):
    rep = nonneg_bounds(geo, 3, 2, 2, 1, range(50, 61), corrected=True)
    assert rep.holds


def test_nonneg_bounds_refuses_negative_coefficients(specs):
    with pytest.raises(NegativeCoefficients):
        nonneg_bounds(specs["chi4"], 3, 2, 2, 1, [50])


@pytest.mark.parametrize("S,r,n", [(1, 0, 2), (1, 1, 3), (2, 1, 1)])
def test_real_integral(geo, S, r, n):
    assert real_integral_check(geo, S, r, n, 2) < 1e-20
