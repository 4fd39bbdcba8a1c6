"""Expansion of F_n^[s] on the finite family F_j^[t] (j <= l0, t <= s), theta^u F (u < mu).

Records are produced by downward substitution in the weight-s recurrence:
for n > l0 put v = n - ell and solve for the top term F_(v+ell)^[s], which
needs Q_ell(-v) != 0 for v >= l0 - ell + 1.  Every other term has a smaller
index or a smaller weight, so memoizing over (n, s) in increasing order of s
and n visits each record once.

The coefficients of theta^u F are either polynomials in z (``Poly``) or, in
point mode, exact rational values at a fixed z.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import lcm
from typing import Sequence

import mpmath

from .poly import Poly, as_fraction
from .recurrence import InhomogeneousData, inhomogeneous_data
from .series import ConvergenceError, Evaluator, GFunctionSpec, to_mpf


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class DecompositionRecord:
    """F_n^[s] = sum p[(j,t)] F_j^[t] + sum_u q[u] * theta^u F."""

    n: int
    s: int
    p: dict  # {(j, t): Fraction}, only nonzero entries
    q: tuple  # Poly per u (polynomial mode) or Fraction per u (point mode)
    m_used: int
    point: Fraction | None = None

    def p_table(self, ell0: int) -> list:
        """Dense table p[j-1][t-1] for 1 <= j <= ell0, 1 <= t <= s."""
        return [[self.p.get((j, t), Fraction(0)) for t in range(1, self.s + 1)] for j in range(1, ell0 + 1)]

    def q_degree(self) -> int:
        if self.point is not None:
            raise DecompositionError("point-mode records carry values, not polynomials")
        return max((p.degree for p in self.q), default=-1)

    def denominators(self) -> int:
        vals = list(self.p.values())
        if self.point is None:
            for poly in self.q:
                vals.extend(poly.coeffs)
        else:
            vals.extend(self.q)
        return reduce(lcm, (Fraction(v).denominator for v in vals), 1)

    def height(self) -> Fraction:
        vals = [abs(v) for v in self.p.values()]
        if self.point is None:
            vals.extend(poly.max_abs() for poly in self.q)
        else:
            vals.extend(abs(v) for v in self.q)
        return max(vals, default=Fraction(0))

    def at(self, z) -> "DecompositionRecord":
        """Point-mode copy with the polynomials evaluated at z."""
        z = as_fraction(z)
        if self.point is not None:
            raise DecompositionError("record is already evaluated")
        return DecompositionRecord(self.n, self.s, dict(self.p), tuple(p(z) for p in self.q), self.m_used, z)

    def to_document(self) -> dict:
        doc = {
            "n": self.n,
            "s": self.s,
            "m_used": self.m_used,
            "p": [[j, t, str(v)] for (j, t), v in sorted(self.p.items())],
        }
        if self.point is None:
            doc["q"] = [poly.to_strings() for poly in self.q]
        else:
            doc["point"] = str(self.point)
            doc["q_values"] = [str(v) for v in self.q]
        return doc


def _add_scaled(p_acc: dict, q_acc: list, rec: DecompositionRecord, c: Fraction):
    if c == 0:
        return
    for key, v in rec.p.items():
        p_acc[key] = p_acc.get(key, Fraction(0)) + c * v
    for u, val in enumerate(rec.q):
        q_acc[u] = q_acc[u] + val * c


class Decomposer:
    """Memoized records for one spec, either symbolic in z or at a fixed point."""

    def __init__(self, spec: GFunctionSpec, point=None):
        self.spec = spec
        self.tf = spec.tf
        self.ell = self.tf.ell
        self.mu = self.tf.mu
        self.ell0 = spec.exponents.ell0
        self.m_used = self.ell0 - self.ell + 1
        self.point = None if point is None else as_fraction(point)
        self._records: dict = {}
        self._data: dict = {}
        self._lock = threading.Lock()
        self._pow_cache: dict = {}

    def _zero(self):
        return Poly() if self.point is None else Fraction(0)

    def _zpow(self, k: int):
        if self.point is None:
            return Poly.monomial(k)
        if k not in self._pow_cache:
            self._pow_cache[k] = self.point**k
        return self._pow_cache[k]

    def data(self, s: int) -> InhomogeneousData:
        if s not in self._data:
            self._data[s] = inhomogeneous_data(self.tf, s)
        return self._data[s]

    def record(self, n: int, s: int) -> DecompositionRecord:
        if s < 1:
            raise DecompositionError("weight 0 is a plain evaluation; use the series engine")
        if n < 1:
            raise DecompositionError("n must be at least 1")
        key = (n, s)
        rec = self._records.get(key)
        if rec is not None:
            return rec
        with self._lock:
            for t in range(1, s + 1):
                for k in range(1, n + 1):
                    if (k, t) not in self._records:
                        self._records[(k, t)] = self._build(k, t)
        return self._records[key]

    def _build(self, n: int, s: int) -> DecompositionRecord:
        zero = self._zero()
        if n <= self.ell0:
            return DecompositionRecord(n, s, {(n, s): Fraction(1)}, tuple([zero] * self.mu), self.m_used, self.point)
        ell = self.ell
        v = n - ell
        q = self.tf.q
        lead = q[ell](-v)
        if lead == 0:
            raise DecompositionError(f"Q_ell(-v) vanishes at v = {v}")
        data = self.data(s)
        p_acc: dict = {}
        q_acc = [zero] * self.mu
        recs = self._records
        for j in range(ell):
            _add_scaled(p_acc, q_acc, recs[(v + j, s)], -q[j](-v))
        for j in range(ell + 1):
            for t in range(1, s):
                c = data.beta_at(j, t, v)
                if c:
                    _add_scaled(p_acc, q_acc, recs[(v + j, t)], c)
            zp = self._zpow(v + j)
            for u in range(len(data.b[j])):
                c = data.b_at(j, u, v)
                if c:
                    q_acc[u] = q_acc[u] + zp * c
        inv = 1 / Fraction(lead)
        p_new = {key: val * inv for key, val in p_acc.items() if val != 0}
        q_new = tuple(val * inv for val in q_acc)
        return DecompositionRecord(n, s, p_new, q_new, self.m_used, self.point)


_DECOMPOSERS: dict = {}
_DECOMPOSERS_LOCK = threading.Lock()


def decomposer(spec: GFunctionSpec, point=None) -> Decomposer:
    key = (id(spec), None if point is None else as_fraction(point))
    with _DECOMPOSERS_LOCK:
        d = _DECOMPOSERS.get(key)
        if d is None or d.spec is not spec:
            d = Decomposer(spec, point)
            _DECOMPOSERS[key] = d
        return d


def decompose(spec: GFunctionSpec, n: int, s: int, point=None) -> DecompositionRecord:
    return decomposer(spec, point).record(n, s)


def verify_decomposition(spec: GFunctionSpec, rec: DecompositionRecord, alpha, bits: int = 128,
                         evaluator: Evaluator | None = None):
    """|F_n^[s](alpha) - sum p F_j^[t](alpha) - sum q_u(alpha) (theta^u F)(alpha)|."""
    alpha = as_fraction(alpha)
    if alpha == 0:
        raise ConvergenceError("evaluation point must be nonzero")
    ev = evaluator or Evaluator(spec, alpha, bits)
    if rec.point is not None and rec.point != alpha:
        raise DecompositionError("point-mode record evaluated at a different point")
    with mpmath.workprec(bits + 32):
        total = ev.shifted(rec.n, rec.s).value
        for (j, t), c in rec.p.items():
            total -= to_mpf(c) * ev.shifted(j, t).value
        for u, qu in enumerate(rec.q):
            val = qu if rec.point is not None else qu(alpha)
            if val:
                total -= to_mpf(Fraction(val)) * ev.theta(u).value
        return abs(total)


def recurrence_consistency(spec: GFunctionSpec, s: int, n: int) -> bool:
    """Exact check that records n..n+ell satisfy the weight-s recurrence termwise."""
    dec = decomposer(spec)
    tf = spec.tf
    data = dec.data(s)
    lhs_p: dict = {}
    lhs_q = [Poly()] * tf.mu
    for j, qj in enumerate(tf.q):
        _add_scaled(lhs_p, lhs_q, dec.record(n + j, s), qj(-n))
    rhs_p: dict = {}
    rhs_q = [Poly()] * tf.mu
    for j in range(tf.ell + 1):
        for t in range(1, s):
            _add_scaled(rhs_p, rhs_q, dec.record(n + j, t), data.beta_at(j, t, n))
        for u in range(len(data.b[j])):
            rhs_q[u] = rhs_q[u] + Poly.monomial(n + j) * data.b_at(j, u, n)
    keys = set(lhs_p) | set(rhs_p)
    if any(lhs_p.get(k, 0) != rhs_p.get(k, 0) for k in keys):
        return False
    return all(a == b for a, b in zip(lhs_q, rhs_q))


@dataclass(frozen=True)
class GrowthProfile:
    s: int
    n_values: tuple
    D_emp: tuple  # cumulative lcm of denominators of records n' <= n
    H_emp: tuple  # max coefficient magnitude of record n
    D_rate: tuple  # D_emp^(1/n) as floats
    H_rate: tuple

    def to_document(self) -> dict:
        return {
            "s": self.s,
            "n": list(self.n_values),
            "D_emp": [str(d) for d in self.D_emp],
            "H_emp": [str(h) for h in self.H_emp],
            "D_rate": [float(x) for x in self.D_rate],
            "H_rate": [float(x) for x in self.H_rate],
        }


def _root(x, n: int) -> float:
    if x == 0:
        return 0.0
    return float(mpmath.exp(mpmath.log(mpmath.mpf(Fraction(x).numerator) / Fraction(x).denominator) / n))


def growth_profile(spec: GFunctionSpec, s: int, n_max: int) -> GrowthProfile:
    if n_max < 10:
        raise DecompositionError("n_max must be at least 10")
    dec = decomposer(spec)
    D = 1
    ns, Ds, Hs = [], [], []
    for n in range(1, n_max + 1):
        rec = dec.record(n, s)
        D = lcm(D, rec.denominators())
        ns.append(n)
        Ds.append(D)
        Hs.append(rec.height())
    return GrowthProfile(
        s, tuple(ns), tuple(Ds), tuple(Hs),
        tuple(_root(d, n) for d, n in zip(Ds, ns)),
        tuple(_root(h, n) for h, n in zip(Hs, ns)),
    )


def cumulative_denominator(spec: GFunctionSpec, S: int, n: int) -> int:
    """lcm of the denominators of all polynomial records with weight <= S and index <= n."""
    dec = decomposer(spec)
    return reduce(lcm, (dec.record(k, t).denominators() for t in range(1, S + 1) for k in range(1, n + 1)), 1)
