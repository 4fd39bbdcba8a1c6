from fractions import Fraction

import mpmath
import pytest

from gseed.poly import Poly
from gseed.recurrence import (
    InhomogeneousData,
    RecurrenceError,
    casoratian,
    casoratian_closed_form,
    determinant,
    general_solution,
    homogeneous_basis,
    inhomogeneous_data,
    safe_start,
    verify_recurrence,
)
from gseed.series import Evaluator, default_alpha

TOL = mpmath.mpf(10) ** -30


def g(n):
    return Fraction(n * n + 1, n + 3)


def _residuals(tf, V, m, top):
    return [sum(tf.q[j](-n) * V[n + j - m] for j in range(tf.ell + 1)) - g(n) for n in range(m, top - tf.ell + 1)]


@pytest.mark.parametrize("name", ["geometric", "neglog", "sqrt6", "apery", "chi4"])
def test_inhomogeneous_recurrence_numerically(specs, name):
    spec = specs[name]
    alpha = default_alpha(spec)
    ev = Evaluator(spec, alpha, 128)
    for s in range(1, spec.tf.mu + 2):
        data = inhomogeneous_data(spec.tf, s)
        for n in range(1, 7):
            assert verify_recurrence(spec, data, n, alpha, 128, ev) < TOL


def test_flipped_weight_one_sign_breaks_recurrence(geo):
    # negating the weight-1 inhomogeneous term gives a visibly wrong identity
    data = inhomogeneous_data(geo.tf, 1)
    flipped = InhomogeneousData(1, data.beta, tuple(tuple(-p for p in row) for row in data.b), data.degrees)
    assert verify_recurrence(geo, data, 3, Fraction(1, 2)) < TOL
    assert verify_recurrence(geo, flipped, 3, Fraction(1, 2)) > 1e-3


def test_degree_bounds(specs):
    for spec in specs.values():
        for s in range(1, 6):
            assert inhomogeneous_data(spec.tf, s).degree_violations() == []


def test_weight_one_data_geometric(geo):
    # Q_0 = X, Q_1 = -X: the weight-1 terms are b_(0,0) = -1 and b_(1,0) = 1
    data = inhomogeneous_data(geo.tf, 1)
    assert data.b[0][0] == Poly([-1]) and data.b[1][0] == Poly([1])


def test_invalid_weight(geo):
    with pytest.raises(RecurrenceError):
        inhomogeneous_data(geo.tf, 0)


def test_determinant():
    assert determinant([[2, 1], [1, 3]]) == 5
    assert determinant([[0, 1], [1, 0]]) == -1
    assert determinant([[1, 2], [2, 4]]) == 0
    assert determinant([]) == 1


def test_basis_solves_homogeneous_recurrence(specs):
    for spec in specs.values():
        tf = spec.tf
        m = safe_start(tf)
        basis = homogeneous_basis(tf, m, m + 25)
        for i in range(1, tf.ell + 1):
            assert all(basis.residual(i, n) == 0 for n in range(m, m + 25 - tf.ell + 1))


def test_casoratian_laws(specs):
    for spec in specs.values():
        tf = spec.tf
        m = safe_start(tf)
        basis = homogeneous_basis(tf, m, m + 30)
        cas = casoratian(basis)
        assert cas.agrees()
        assert all(w != 0 for w in cas.W)
        for n in range(m, m + 30 - tf.ell + 2):
            assert casoratian_closed_form(tf, m, cas.W_at(m), n) == cas.W_at(n)


def test_casoratian_with_custom_seed(apery):
    tf = apery.tf
    basis = homogeneous_basis(tf, 1, 20, seed=[[1, 2], [3, 5]])
    assert casoratian(basis).W_at(1) == determinant([[2, 5], [1, 3]])


def test_basis_rejects_vanishing_indicial_values(specs):
    # Q_0 of the Catalan-type operator vanishes at X = -1, i.e. n = 1
    with pytest.raises(RecurrenceError):
        homogeneous_basis(specs["catalan"].tf, 1, 10)


@pytest.mark.parametrize("name", ["geometric", "catalan", "sqrt6", "halflog2", "apery", "chi4"])
def test_variation_of_constants_solves_inhomogeneous(specs, name):
    tf = specs[name].tf
    m = safe_start(tf)
    N = m + 20
    basis = homogeneous_basis(tf, m, N)
    cas = casoratian(basis)
    top = N - tf.ell + 1
    chi = [Fraction(1, 3)] * tf.ell
    V = general_solution(basis, cas, g, chi, top)
    assert all(r == 0 for r in _residuals(tf, V, m, top))
    # the initial value is the chosen homogeneous combination
    assert V[0] == sum(c * basis.value(j + 1, m) for j, c in enumerate(chi))


def test_opposite_increment_sign_fails(specs):
    # the increment +D_j g / (Q_ell W) with D_j = (-1)^j * minor does not solve the system
    tf = specs["apery"].tf
    m = safe_start(tf)
    N = m + 12
    basis = homogeneous_basis(tf, m, N)
    cas = casoratian(basis)
    top = N - tf.ell + 1
    consts = [Fraction(0)] * tf.ell
    V = []
    for n in range(m, top + 1):
        if n >= m + 1:
            for j in range(1, tf.ell + 1):
                consts[j - 1] += cas.D_at(j, n) * g(n - 1) / (tf.q[tf.ell](1 - n) * cas.W_at(n))
        V.append(sum(consts[j] * basis.value(j + 1, n) for j in range(tf.ell)))
    assert any(r != 0 for r in _residuals(tf, V, m, top))


def test_general_solution_range_checks(geo):
    basis = homogeneous_basis(geo.tf, 1, 10)
    cas = casoratian(basis)
    with pytest.raises(RecurrenceError):
        general_solution(basis, cas, g, [1], 11)
    with pytest.raises(RecurrenceError):
        general_solution(basis, cas, g, [1, 2], 5)
