"""Recurrences in n satisfied by the shifted series, and the homogeneous solution space.

For a fixed weight s the functions F_n^[s] satisfy

    sum_j Q_j(-n) F_(n+j)^[s] = sum_j sum_(t<s) beta_(j,t)(n) F_(n+j)^[t]
                                + sum_j z^(n+j) B_j(n; theta) F,

with beta and the coefficients of B_j polynomial in n.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence

import mpmath

from .operator import ThetaForm, exponent_report
from .poly import Poly, as_fraction
from .series import ConvergenceError, Evaluator, GFunctionSpec, to_mpf


class RecurrenceError(ValueError):
    pass


# --------------------------------------------------------- inhomogeneous data


@dataclass(frozen=True)
class InhomogeneousData:
    """beta[j][t-1] and b[j][q] are polynomials in n."""

    s: int
    beta: tuple  # beta[j] = (beta_(j,1), ..., beta_(j,s-1))
    b: tuple  # b[j] = (b_(j,0), ..., b_(j,d_j-s)); empty when d_j < s
    degrees: tuple  # d_j = deg Q_j

    def beta_at(self, j: int, t: int, n: int) -> Fraction:
        return self.beta[j][t - 1](n)

    def b_at(self, j: int, q: int, n: int) -> Fraction:
        return self.b[j][q](n)

    def B_poly(self, j: int, n: int) -> Poly:
        """B_j(n; X) as a polynomial in X at a given n."""
        return Poly([c(n) for c in self.b[j]])

    def degree_violations(self) -> list:
        """Entries breaking deg beta_(j,t) <= d_j+t-s or deg b_(j,q) <= d_j-q-s."""
        bad = []
        for j, dj in enumerate(self.degrees):
            for t, p in enumerate(self.beta[j], start=1):
                if not p.is_zero() and p.degree > dj + t - self.s:
                    bad.append(("beta", j, t, p.degree))
                if t < self.s - dj and not p.is_zero():
                    bad.append(("beta-vanishing", j, t, p.degree))
            if len(self.b[j]) > max(dj - self.s + 1, 0):
                bad.append(("B-length", j, len(self.b[j])))
            for q, p in enumerate(self.b[j]):
                if not p.is_zero() and p.degree > dj - q - self.s:
                    bad.append(("b", j, q, p.degree))
        return bad

    def to_document(self) -> dict:
        return {
            "s": self.s,
            "beta": [[p.to_strings() for p in row] for row in self.beta],
            "b": [[p.to_strings() for p in row] for row in self.b],
        }


def _npoly_power(base: Poly, e: int) -> Poly:
    return base**e


def inhomogeneous_data(tf: ThetaForm, s: int) -> InhomogeneousData:
    if s < 1:
        raise RecurrenceError("weight s must be at least 1")
    ell = tf.ell
    degs = tuple(q.degree for q in tf.q)
    nvar = Poly.x()
    beta = [[] for _ in range(ell + 1)]
    b = []
    # weight 1
    for j, qj in enumerate(tf.q):
        dj = qj.degree
        shift = nvar + j  # n + j
        row = []
        for q in range(dj):
            acc = Poly()
            for m in range(q + 1, dj + 1):
                rho = qj[m]
                if rho == 0:
                    continue
                for p in range(q + 1, m + 1):
                    c = rho * comb(m, p) * j ** (m - p) * (-1) ** (p - q)
                    acc = acc + _npoly_power(shift, p - q - 1) * c
            row.append(acc)
        b.append(row)
    # weights 2..s
    for cur in range(1, s):
        new_b = []
        for j in range(ell + 1):
            shift = nvar + j
            row = b[j]
            first = Poly()
            for q, bq in enumerate(row):
                first = first + _npoly_power(shift, q) * bq * (-1) ** q
            beta[j] = [first] + beta[j]
            nxt = []
            for h in range(len(row) - 1):
                acc = Poly()
                for q in range(h + 1, len(row)):
                    acc = acc + _npoly_power(shift, q - h - 1) * row[q] * (-1) ** (q - h - 1)
                nxt.append(acc)
            new_b.append(nxt)
        b = new_b
    return InhomogeneousData(s, tuple(tuple(r) for r in beta), tuple(tuple(r) for r in b), degs)


def verify_recurrence(spec: GFunctionSpec, data: InhomogeneousData, n: int, alpha, bits: int = 128,
                      evaluator: Evaluator | None = None):
    """|LHS - RHS| of the weight-s recurrence at z = alpha."""
    alpha = as_fraction(alpha)
    if n < 1:
        raise RecurrenceError("n must be at least 1")
    if alpha == 0:
        raise ConvergenceError("evaluation point must be nonzero")
    ev = evaluator or Evaluator(spec, alpha, bits)
    tf = spec.tf
    s = data.s
    with mpmath.workprec(bits + 32):
        a = to_mpf(alpha)
        lhs = mpmath.mpf(0)
        rhs = mpmath.mpf(0)
        scale = mpmath.mpf(0)
        for j, qj in enumerate(tf.q):
            term = to_mpf(qj(-n)) * ev.shifted(n + j, s).value
            lhs += term
            scale = max(scale, abs(term))
            for t in range(1, s):
                c = data.beta_at(j, t, n)
                if c:
                    term = to_mpf(c) * ev.shifted(n + j, t).value
                    rhs += term
                    scale = max(scale, abs(term))
            for q in range(len(data.b[j])):
                c = data.b_at(j, q, n)
                if c:
                    term = to_mpf(c) * a ** (n + j) * ev.theta(q).value
                    rhs += term
                    scale = max(scale, abs(term))
        return abs(lhs - rhs)


# ------------------------------------------------------ homogeneous solutions


@dataclass(frozen=True)
class HomogeneousBasis:
    """u[i][n - m] = u_(i+1)(n) for m <= n <= N."""

    tf: ThetaForm
    m: int
    N: int
    u: tuple
    seed: tuple

    @property
    def ell(self) -> int:
        return self.tf.ell

    def value(self, i: int, n: int) -> Fraction:
        return self.u[i - 1][n - self.m]

    def row(self, n: int) -> list:
        return [col[n - self.m] for col in self.u]

    def residual(self, i: int, n: int) -> Fraction:
        return sum((qj(-n) * self.value(i, n + j) for j, qj in enumerate(self.tf.q)), Fraction(0))


def safe_start(tf: ThetaForm) -> int:
    """Smallest m >= 1 with m > -e for integer exponents e at 0 and m > f - ell at infinity."""
    rep = exponent_report(tf)
    m = 1
    for e in rep.integer_at_zero:
        m = max(m, -e + 1)
    for f in rep.integer_at_infinity:
        m = max(m, f - tf.ell + 1)
    return m


def homogeneous_basis(tf: ThetaForm, m: int, N: int, seed: Sequence | None = None) -> HomogeneousBasis:
    ell = tf.ell
    if ell < 1:
        raise RecurrenceError("ell must be at least 1")
    if N < m + ell - 1:
        raise RecurrenceError("N too small for the seed block")
    q = tf.q
    for n in range(m, N + 1):
        if q[0](-n) == 0:
            raise RecurrenceError(f"Q_0(-n) vanishes at n = {n}")
        if q[ell](-n) == 0:
            raise RecurrenceError(f"Q_ell(-n) vanishes at n = {n}")
    if seed is None:
        seed = [[Fraction(int(i == k)) for k in range(ell)] for i in range(ell)]
    seed = tuple(tuple(as_fraction(x) for x in col) for col in seed)
    cols = []
    for i in range(ell):
        vals = list(seed[i])
        for n in range(m, N - ell + 1):
            acc = Fraction(0)
            for j in range(ell):
                acc += q[j](-n) * vals[n - m + j]
            vals.append(-acc / q[ell](-n))
        cols.append(tuple(vals))
    return HomogeneousBasis(tf, m, N, tuple(cols), seed)


def determinant(rows: Sequence) -> Fraction:
    """Exact determinant by fraction-free elimination."""
    a = [list(map(Fraction, r)) for r in rows]
    size = len(a)
    if size == 0:
        return Fraction(1)
    sign = 1
    for c in range(size):
        pivot = next((r for r in range(c, size) if a[r][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            a[c], a[pivot] = a[pivot], a[c]
            sign = -sign
        for r in range(c + 1, size):
            f = a[r][c] / a[c][c]
            if f:
                for k in range(c, size):
                    a[r][k] -= f * a[c][k]
    det = Fraction(sign)
    for c in range(size):
        det *= a[c][c]
    return det


@dataclass(frozen=True)
class CasoratianData:
    m: int
    W: tuple  # W(n) for m <= n <= N - ell + 1
    W_step: tuple  # the same values propagated by the first-order law
    minors: tuple  # minors[j-1][n - m - 1] = D_j(n) for m+1 <= n

    def W_at(self, n: int) -> Fraction:
        return self.W[n - self.m]

    def D_at(self, j: int, n: int) -> Fraction:
        return self.minors[j - 1][n - self.m - 1]

    def agrees(self) -> bool:
        return self.W == self.W_step


def casoratian(basis: HomogeneousBasis) -> CasoratianData:
    ell = basis.ell
    m = basis.m
    top = basis.N - ell + 1
    q = basis.tf.q
    W = []
    for n in range(m, top + 1):
        rows = [basis.row(n + ell - 1 - r) for r in range(ell)]
        w = determinant(rows)
        if w == 0:
            raise RecurrenceError(f"casoratian vanishes at n = {n}")
        W.append(w)
    step = [W[0]]
    for n in range(m, top):
        step.append(step[-1] * (-1) ** ell * q[0](-n) / q[ell](-n))
    minors = []
    for j in range(1, ell + 1):
        col = []
        for n in range(m + 1, top + 2):
            if n + ell - 2 > basis.N:
                break
            rows = [[x for i, x in enumerate(basis.row(n + ell - 2 - r)) if i != j - 1] for r in range(ell - 1)]
            col.append((-1) ** j * determinant(rows))
        minors.append(tuple(col))
    return CasoratianData(m, tuple(W), tuple(step), tuple(minors))


def casoratian_closed_form(tf: ThetaForm, m: int, w_m: Fraction, n: int) -> Fraction | None:
    """Pochhammer product for W(n); None when some exponent is not rational."""
    rep = exponent_report(tf)
    if rep.at_zero.unfactored or rep.at_infinity.unfactored:
        return None
    e = rep.at_zero.roots_with_multiplicity()
    f = rep.at_infinity.roots_with_multiplicity()
    ell = tf.ell
    g0 = tf.q[0].leading
    gl = tf.q[ell].leading
    val = Fraction(w_m) * ((-1) ** ell * g0 / gl) ** (n - m)
    for ei in e:
        for k in range(n - m):
            val *= m + ei + k
    for fi in f:
        for k in range(n - m):
            val /= m - fi + ell + k
    return val


def general_solution(basis: HomogeneousBasis, cas: CasoratianData, g, chi: Sequence, n_max: int) -> list:
    """Variation of constants for sum_j Q_j(-n) V(n+j) = g(n), n >= m.

    The increment of the j-th constant is (-1)^(j+1) * minor * g / (Q_ell * W),
    which is minus D_j(n) g(n-1) / (Q_ell(1-n) W(n)) with D_j as stored.
    """
    ell = basis.ell
    m = basis.m
    q = basis.tf.q
    if n_max > basis.N - ell + 1:
        raise RecurrenceError(f"n_max must be at most {basis.N - ell + 1} for this basis")
    if len(chi) != ell:
        raise RecurrenceError(f"need {ell} constants")
    consts = [as_fraction(c) for c in chi]
    out = []
    for n in range(m, n_max + 1):
        if n >= m + 1:
            for j in range(1, ell + 1):
                consts[j - 1] -= cas.D_at(j, n) * as_fraction(g(n - 1)) / (q[ell](1 - n) * cas.W_at(n))
        out.append(sum((consts[j] * basis.value(j + 1, n) for j in range(ell)), Fraction(0)))
    return out
