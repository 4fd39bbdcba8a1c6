"""Linear forms in the shifted series built from a rational partial-fraction kernel.

T(z) = n!^(S-r) * sum_k (k-rn+1)_(rn) / (k+1)_(n+1)^S * A_k z^(-k), rewritten with
the decomposition records as

T(z) = sum_(u,s) C_(u,s)(z) F_u^[s](1/z) + sum_u Ct_u(z) z^(-S(ell-1)) (theta^u F)(1/z).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce
from math import factorial, lcm
from typing import Sequence

import mpmath

from .decomposition import decomposer
from .poly import Poly, as_fraction
from .series import (
    ComplexApprox,
    ConvergenceError,
    Evaluator,
    GFunctionSpec,
    radius_lower_bound,
    stabilized_sum,
    guard_bits,
    to_mpf,
)


class LinearFormError(ValueError):
    pass


def lcm_upto(n: int) -> int:
    return reduce(lcm, range(1, n + 1), 1)


# ----------------------------------------------------------- partial fractions


@lru_cache(maxsize=64)
def _harmonic_table(top: int, order: int) -> tuple:
    """H[m][x] = sum_(d=1..x) d^(-m) for 1 <= m <= order, 0 <= x <= top."""
    table = [None]
    for m in range(1, order + 1):
        row = [Fraction(0)]
        acc = Fraction(0)
        for d in range(1, top + 1):
            acc += Fraction(1, d**m)
            row.append(acc)
        table.append(tuple(row))
    return tuple(table)


def _exp_series(p: Sequence, order: int) -> list:
    """Coefficients e_0..e_order of exp(sum_(m>=1) p[m] h^m), with e_0 = 1."""
    e = [Fraction(1)] + [Fraction(0)] * order
    for k in range(1, order + 1):
        acc = Fraction(0)
        for i in range(1, k + 1):
            acc += i * p[i] * e[k - i]
        e[k] = acc / k
    return e


@dataclass(frozen=True)
class PartialFractionTable:
    S: int
    r: int
    n: int
    c: tuple  # c[j-1][s-1] = c_(j,s)

    def get(self, j: int, s: int) -> Fraction:
        return self.c[j - 1][s - 1]

    def kernel(self, k) -> Fraction:
        """n!^(S-r) (k-rn+1)_(rn) / prod_(j=1..n+1) (k+j)^S, evaluated exactly."""
        k = as_fraction(k)
        num = Fraction(factorial(self.n)) ** (self.S - self.r)
        for t in range(self.r * self.n):
            num *= k - t
        den = Fraction(1)
        for j in range(1, self.n + 2):
            den *= (k + j) ** self.S
        return num / den

    def expansion(self, k) -> Fraction:
        k = as_fraction(k)
        return sum((self.get(j, s) / (k + j) ** s for j in range(1, self.n + 2) for s in range(1, self.S + 1)),
                   Fraction(0))

    def reconstruction_holds(self, samples: Sequence | None = None) -> bool:
        if samples is None:
            count = self.S * (self.n + 1) + 1
            samples = [Fraction(i) for i in range(count)] + [Fraction(-1, 2), Fraction(7, 3)]
        return all(self.kernel(k) == self.expansion(k) for k in samples)

    def integrality(self) -> bool:
        d = lcm_upto(self.n) ** self.S
        return all((d * x).denominator == 1 for row in self.c for x in row)

    def to_document(self) -> dict:
        return {"S": self.S, "r": self.r, "n": self.n, "c": [[str(x) for x in row] for row in self.c]}


def partial_fractions(S: int, r: int, n: int) -> PartialFractionTable:
    """Residue jets of the kernel at k = -j via logarithmic derivatives."""
    if not (0 <= r <= S) or S < 1 or n < 0:
        raise LinearFormError("need S >= 1, 0 <= r <= S, n >= 0")
    rn = r * n
    order = S - 1
    H = _harmonic_table(n + rn + 1, max(order, 1))
    nf = factorial(n) ** (S - r)
    rows = []
    for j in range(1, n + 2):
        # value of the kernel times (k+j)^S at k = -j
        rising = 1
        for t in range(rn):
            rising *= j + t
        base = Fraction(nf * (-1) ** rn * rising) / Fraction(
            (factorial(n + 1 - j) * (-1) ** (j - 1) * factorial(j - 1)) ** S
        )
        # power sums p_m of the log-derivative expansion around k = -j
        p = [Fraction(0)] * (order + 1)
        for m in range(1, order + 1):
            num_part = (-1) ** m * (H[m][j + rn - 1] - H[m][j - 1])
            den_part = H[m][n + 1 - j] + (-1) ** m * H[m][j - 1]
            p[m] = (-1) ** (m - 1) * (num_part - S * den_part) / m
        e = _exp_series(p, order)
        rows.append(tuple(base * e[S - s] for s in range(1, S + 1)))
    return PartialFractionTable(S, r, n, tuple(rows))


@dataclass(frozen=True)
class BoundReport:
    holds: bool
    max_ratio: Fraction
    bound: int

    def to_document(self) -> dict:
        return {"holds": self.holds, "max_ratio": str(self.max_ratio), "bound": str(self.bound)}


def coefficient_bound(S: int, r: int, n: int) -> int:
    return (r * n + 1) * 2**S * (r**r * 2 ** (S + r + 1)) ** n


def coefficient_bound_check(table: PartialFractionTable) -> BoundReport:
    bound = coefficient_bound(table.S, table.r, table.n)
    worst = max(abs(x) for row in table.c for x in row) / bound
    return BoundReport(worst <= 1, worst, bound)


# ------------------------------------------------------------------- T series


def t_series(spec: GFunctionSpec, S: int, r: int, n: int, z_point, bits: int = 128) -> ComplexApprox:
    """Direct summation from k = rn, where the Pochhammer factor stops vanishing."""
    z_point = as_fraction(z_point)
    if z_point == 0:
        raise ConvergenceError("z must be nonzero")
    R = radius_lower_bound(spec, bits)[0]
    if abs(to_mpf(z_point)) * R <= 1:
        raise ConvergenceError("|z| must exceed 1/R")
    rn = r * n
    prec = guard_bits(bits)
    with mpmath.workprec(prec):
        inv = 1 / to_mpf(z_point)
        w0 = (mpmath.factorial(n) ** (S - r) * mpmath.factorial(rn)
              / mpmath.rf(rn + 1, n + 1) ** S)

        def terms():
            k = rn
            w = w0 * inv**rn
            block = 256
            coeffs = spec.mp_coefficients(k + block, prec)
            while True:
                if k >= len(coeffs):
                    coeffs = spec.mp_coefficients(k + block, prec)
                yield w * coeffs[k]
                w = w * (k + 1) / (k + 1 - rn) * (mpmath.mpf(k + 1) / (k + n + 2)) ** S * inv
                k += 1

        val, tail, count = stabilized_sum(terms(), bits)
    return ComplexApprox(val, bits, tail, count)


def t_coefficient(spec: GFunctionSpec, S: int, r: int, n: int, k: int) -> Fraction:
    """Exact coefficient of z^(-k) in T."""
    if k < r * n:
        return Fraction(0)
    w = Fraction(factorial(n) ** (S - r))
    for t in range(r * n):
        w *= k - t
    den = 1
    for j in range(1, n + 2):
        den *= k + j
    return w / den**S * spec.coefficient(k)


# ------------------------------------------------------------- linear forms


@dataclass
class LinearFormRecord:
    spec_label: str
    S: int
    r: int
    n: int
    alpha: Fraction
    ell0: int
    mu: int
    ell: int
    table: PartialFractionTable
    C: dict | None  # {(u, s): Poly}, None in value-only mode
    C_tilde: list | None  # Poly per u
    C_values: dict  # {(u, s): Fraction} at z = 1/alpha
    C_tilde_values: list
    Delta_n: int
    delta_bound: int | None
    p_int: dict
    p_tilde_int: list
    value: ComplexApprox | None = None
    form_value: object = None
    residual: object = None
    notes: list = field(default_factory=list)

    def degree_excess(self) -> list:
        """Polynomials exceeding n+1 (C) or n+1+S(ell-1) (C tilde)."""
        out = []
        if self.C is None:
            return out
        for key, poly in self.C.items():
            if poly.degree > self.n + 1:
                out.append(("C", key, poly.degree))
        for u, poly in enumerate(self.C_tilde):
            if poly.degree > self.n + 1 + self.S * (self.ell - 1):
                out.append(("C_tilde", u, poly.degree))
        return out

    def integrality(self) -> bool:
        vals = list(self.C_values.values()) + list(self.C_tilde_values)
        return all((self.Delta_n * v).denominator == 1 for v in vals)

    def max_int_coefficient(self) -> int:
        vals = [abs(v) for v in self.p_int.values()] + [abs(v) for v in self.p_tilde_int]
        return max(vals, default=0)

    def tau(self):
        """Delta_n * T(1/alpha) from the direct series value."""
        with mpmath.workprec(self.value.bits + 32):
            return self.Delta_n * self.value.value

    def to_document(self) -> dict:
        doc = {
            "spec": self.spec_label,
            "S": self.S,
            "r": self.r,
            "n": self.n,
            "alpha": str(self.alpha),
            "ell0": self.ell0,
            "Delta_n": str(self.Delta_n),
            "delta_bound_divisible": None if self.delta_bound is None else self.delta_bound % self.Delta_n == 0,
            "p_int": [[u, s, str(v)] for (u, s), v in sorted(self.p_int.items())],
            "p_tilde_int": [str(v) for v in self.p_tilde_int],
            "degree_excess": self.degree_excess(),
            "notes": list(self.notes),
        }
        if self.C is not None:
            doc["C"] = [[u, s, poly.to_strings()] for (u, s), poly in sorted(self.C.items())]
            doc["C_tilde"] = [poly.to_strings() for poly in self.C_tilde]
        if self.value is not None:
            doc["value"] = self.value.to_document()
        if self.residual is not None:
            from .report import mp_to_document

            doc["residual"] = mp_to_document(self.residual, 64)
        return doc


def _assemble_values(spec, table, n, S, alpha, ell0, mu, ell):
    """C_(u,s)(1/alpha) and Ct_u(1/alpha) from point-mode records at alpha."""
    dec = decomposer(spec, alpha)
    inv = 1 / alpha
    C_vals = {}
    for u in range(1, ell0 + 1):
        for s in range(1, S + 1):
            C_vals[(u, s)] = table.get(u, s) * inv**u
    Ct_vals = [Fraction(0)] * mu
    shift = S * (ell - 1)
    for j in range(ell0 + 1, n + 2):
        zj = inv**j
        for sigma in range(1, S + 1):
            c = table.get(j, sigma)
            if c == 0:
                continue
            rec = dec.record(j, sigma)
            for (u, s), pv in rec.p.items():
                C_vals[(u, s)] += zj * c * pv
            factor = c * inv ** (j + shift)
            for u in range(mu):
                if rec.q[u]:
                    Ct_vals[u] += factor * rec.q[u]
    return C_vals, Ct_vals


def _assemble_polys(spec, table, n, S, ell0, mu, ell):
    dec = decomposer(spec)
    C = {}
    for u in range(1, ell0 + 1):
        for s in range(1, S + 1):
            C[(u, s)] = Poly.monomial(u, table.get(u, s))
    Ct = [Poly()] * mu
    shift = S * (ell - 1)
    for j in range(ell0 + 1, n + 2):
        for sigma in range(1, S + 1):
            c = table.get(j, sigma)
            if c == 0:
                continue
            rec = dec.record(j, sigma)
            for (u, s), pv in rec.p.items():
                C[(u, s)] = C[(u, s)] + Poly.monomial(j, c * pv)
            top = j + shift
            for u in range(mu):
                qpoly = rec.q[u]
                if qpoly.is_zero():
                    continue
                if qpoly.degree > top:
                    raise LinearFormError(f"record ({j},{sigma}) exceeds the degree bound")
                # z^top * q(1/z) reverses coefficients into degree top
                rev = [Fraction(0)] * (top + 1)
                for i, cf in enumerate(qpoly.coeffs):
                    rev[top - i] = cf * c
                Ct[u] = Ct[u] + Poly(rev)
    return C, Ct


def build_linear_form(spec: GFunctionSpec, S: int, r: int, n: int, alpha, bits: int = 128,
                      polynomials: bool = True, evaluate: bool = True,
                      evaluator: Evaluator | None = None) -> LinearFormRecord:
    alpha = as_fraction(alpha)
    if alpha == 0:
        raise LinearFormError("alpha must be nonzero")
    if not (0 <= r <= S) or S < 1:
        raise LinearFormError("need S >= 1 and 0 <= r <= S")
    ell0 = spec.exponents.ell0
    if n < ell0:
        raise LinearFormError(f"n must be at least l0 = {ell0}")
    R = radius_lower_bound(spec, bits)[0]
    if abs(to_mpf(alpha)) >= R:
        raise ConvergenceError("alpha must lie inside the disk of convergence")
    tf = spec.tf
    mu, ell = tf.mu, tf.ell
    table = partial_fractions(S, r, n)
    C_vals, Ct_vals = _assemble_values(spec, table, n, S, alpha, ell0, mu, ell)
    C = Ct = None
    notes = []
    delta_bound = None
    if polynomials:
        C, Ct = _assemble_polys(spec, table, n, S, ell0, mu, ell)
        z = 1 / alpha
        for key, poly in C.items():
            if poly(z) != C_vals[key]:
                raise LinearFormError("polynomial and point assembly disagree")
        for u, poly in enumerate(Ct):
            if poly(z) != Ct_vals[u]:
                raise LinearFormError("polynomial and point assembly disagree")
        from .decomposition import cumulative_denominator

        q_num = abs(alpha.numerator)
        delta_bound = (q_num ** (n + 1 + S * (ell - 1)) * lcm_upto(n) ** S
                       * cumulative_denominator(spec, S, n + 1))
    vals = list(C_vals.values()) + Ct_vals
    Delta = reduce(lcm, (v.denominator for v in vals), 1)
    p_int = {key: int(v * Delta) for key, v in C_vals.items()}
    pt_int = [int(v * Delta) for v in Ct_vals]
    rec = LinearFormRecord(spec.label, S, r, n, alpha, ell0, mu, ell, table, C, Ct, C_vals, Ct_vals,
                           Delta, delta_bound, p_int, pt_int, notes=notes)
    if rec.degree_excess():
        notes.append(f"degree bound exceeded: {rec.degree_excess()}")
    if evaluate:
        rec.value = t_series(spec, S, r, n, 1 / alpha, bits)
        rec.form_value, rec.residual = evaluate_form(spec, rec, bits, evaluator)
    return rec


def evaluate_form(spec: GFunctionSpec, rec: LinearFormRecord, bits: int = 128,
                  evaluator: Evaluator | None = None):
    """Evaluate the C / C tilde combination at z = 1/alpha and compare with T.

    The combination cancels down to T, so the basis values are computed with
    enough extra bits to absorb the size of the integer coefficients.
    """
    magnitude = max(rec.max_int_coefficient(), 1).bit_length() + rec.Delta_n.bit_length()
    work = bits + magnitude + 64
    ev = evaluator
    if ev is None or ev.bits < work or ev.alpha != rec.alpha:
        ev = Evaluator(spec, rec.alpha, work)
    with mpmath.workprec(work + 32):
        total = mpmath.mpf(0)
        for (u, s), c in rec.C_values.items():
            if c:
                total += to_mpf(c) * ev.shifted(u, s).value
        factor = to_mpf(rec.alpha) ** (rec.S * (rec.ell - 1))
        for u, c in enumerate(rec.C_tilde_values):
            if c:
                total += to_mpf(c) * factor * ev.theta(u).value
        residual = abs(total - rec.value.value) if rec.value is not None else None
        return +total, residual


# --------------------------------------------------------------- Pade check


@dataclass(frozen=True)
class PadeReport:
    order: int  # number of leading w-coefficients (w = 1/z) that vanish
    first_nonzero: int | None
    negative_powers_vanish: bool
    matches_t: bool
    checked_through: int

    def to_document(self) -> dict:
        return dict(self.__dict__)


def pade_order_check(spec: GFunctionSpec, rec: LinearFormRecord, extra: int = 5) -> PadeReport:
    """Expand the reconstructed form in w = 1/z exactly and compare with T.

    F_u^[s](w) = sum_k A_k w^(k+u)/(k+u)^s and (theta^u F)(w) = sum_k k^u A_k w^k.
    """
    if rec.C is None:
        raise LinearFormError("Pade check needs polynomial mode")
    S, r, n = rec.S, rec.r, rec.n
    K = r * n + extra
    top_neg = n + 1 + S * (rec.ell - 1)
    A = spec.coefficients(K + top_neg + 1)
    coeffs: dict = {}

    def add(power, value):
        if value:
            coeffs[power] = coeffs.get(power, Fraction(0)) + value

    for (u, s), poly in rec.C.items():
        for i, c in enumerate(poly.coeffs):
            if c == 0:
                continue
            # c z^i F_u^[s](w) = c sum_k A_k w^(k+u-i)/(k+u)^s
            for k in range(0, K + i - u + 1):
                if A[k]:
                    add(k + u - i, c * A[k] / Fraction(k + u) ** s)
    shift = S * (rec.ell - 1)
    for u, poly in enumerate(rec.C_tilde):
        for i, c in enumerate(poly.coeffs):
            if c == 0:
                continue
            # c z^i w^shift (theta^u F)(w) = c sum_k k^u A_k w^(k+shift-i)
            for k in range(0, K + i - shift + 1):
                if A[k]:
                    add(k + shift - i, c * A[k] * k**u)
    neg_ok = all(v == 0 for p, v in coeffs.items() if p < 0)
    order = 0
    while order <= K and coeffs.get(order, 0) == 0:
        order += 1
    first = order if order <= K else None
    matches = all(coeffs.get(k, 0) == t_coefficient(spec, S, r, n, k) for k in range(K + 1))
    return PadeReport(order, first, neg_ok, matches, K)
