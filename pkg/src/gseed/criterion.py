"""Dimension-bound arithmetic and the heuristic end-to-end certificate."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import mpmath
import numpy as np

from .asymptotics import fit_rate
from .linear_forms import build_linear_form
from .poly import as_fraction
from .series import GFunctionSpec, radius_lower_bound, to_mpf


class CriterionError(ValueError):
    pass


# ------------------------------------------------------------ shift selection


def vandermonde(zeta: Sequence) -> complex:
    """prod_(i<j) (zeta_j - zeta_i)."""
    out = mpmath.mpc(1)
    for i, j in combinations(range(len(zeta)), 2):
        out *= mpmath.mpc(zeta[j]) - mpmath.mpc(zeta[i])
    return out


@dataclass(frozen=True)
class ShiftChoice:
    delta: int
    value: object  # |sum c_t zeta_t^(n+delta)|
    bound: object  # |c_1 V| / T!
    holds: bool


def shift_select(c: Sequence, zeta: Sequence, n: int, tol: float = 1e-12) -> ShiftChoice:
    """Smallest delta in 0..T-1 with |sum c_t zeta_t^(n+delta)| >= |c_1 V(zeta)| / T!."""
    T = len(c)
    if T == 0 or T != len(zeta):
        raise CriterionError("c and zeta must be nonempty and of equal length")
    c = [mpmath.mpc(x) for x in c]
    zeta = [mpmath.mpc(x) for x in zeta]
    if any(x == 0 for x in c):
        raise CriterionError("coefficients must be nonzero")
    bound = abs(c[0] * vandermonde(zeta)) / math.factorial(T)
    best = None
    for delta in range(T):
        val = abs(sum(ct * zt ** (n + delta) for ct, zt in zip(c, zeta)))
        if val >= bound * (1 - tol):
            return ShiftChoice(delta, val, bound, True)
        if best is None or val > best[1]:
            best = (delta, val)
    return ShiftChoice(best[0], best[1], bound, False)


# ------------------------------------------------------------ dimension bound


@dataclass(frozen=True)
class DimensionBound:
    value: float
    count: int  # floor(value) + 1

    def to_document(self) -> dict:
        return {"value": self.value, "count": self.count}


def dimension_bound(a0, b, degree: int = 1) -> DimensionBound:
    """(1 - log a0 / log b) / degree for 0 < a0 < 1 < b."""
    a0f = float(a0)
    bf = float(b)
    if not (0 < a0f < 1 < bf):
        raise CriterionError("need 0 < a0 < 1 < b")
    if degree < 1:
        raise CriterionError("degree must be at least 1")
    return dimension_bound_log(math.log(a0f), math.log(bf), degree)


def dimension_bound_log(log_a0: float, log_b: float, degree: int = 1) -> DimensionBound:
    """Same formula from logarithms, for rates that under- or overflow floats."""
    if not (log_a0 < 0 < log_b):
        raise CriterionError("need log a0 < 0 < log b")
    value = (1 - log_a0 / log_b) / degree
    return DimensionBound(value, math.floor(value) + 1)


# ---------------------------------------------------------------- certificate


def default_r(S: int) -> int:
    if S <= 1:
        return 0
    return min(S, int(S / math.log(S) ** 2))


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("GSEED_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class Certificate:
    label: str
    alpha: Fraction
    S: int
    r: int
    window: tuple
    bits: int
    n_values: list
    log_tau: list
    log_coeff: list
    log_a0_emp: float
    log_b_emp: float
    degree: int = 1
    bound: float | None = None
    caveats: list = field(default_factory=list)

    @property
    def a0_emp(self) -> float:
        return math.exp(self.log_a0_emp)

    @property
    def b_emp(self) -> float:
        return math.exp(self.log_b_emp)

    def to_document(self) -> dict:
        return {
            "label": self.label,
            "alpha": str(self.alpha),
            "S": self.S,
            "r": self.r,
            "window": list(self.window),
            "bits": self.bits,
            "float_bits": 53,
            "degree": self.degree,
            "log_a0_emp": self.log_a0_emp,
            "log_b_emp": self.log_b_emp,
            "a0_emp": self.a0_emp,
            "b_emp": self.b_emp,
            "bound": self.bound,
            "samples": [[n, lt, lc] for n, lt, lc in zip(self.n_values, self.log_tau, self.log_coeff)],
            "caveats": list(self.caveats),
        }


BASE_CAVEATS = (
    "heuristic: growth rates are least-squares fits over a finite window, not limits",
    "the criterion also needs the exact asymptotic shape of the linear forms, which is not checked here",
    "the bound is stated for the space spanned by F_u^[s](alpha) and (theta^u F)(alpha); "
    "dropping the mu values (theta^u F)(alpha) can lower it by up to mu",
)


def _log_abs_int(x: int) -> float:
    x = abs(x)
    if x == 0:
        return float("-inf")
    shift = max(x.bit_length() - 60, 0)
    return math.log(x >> shift) + shift * math.log(2)


def certify(spec: GFunctionSpec, alpha, S: int, r: int | None = None, window: tuple = (100, 160),
            bits: int = 256, step: int = 1) -> Certificate:
    alpha = as_fraction(alpha)
    r = default_r(S) if r is None else r
    if not (0 <= r <= S):
        raise CriterionError("need 0 <= r <= S")
    n1, n2 = window
    if n2 - n1 < 20:
        raise CriterionError("window must span at least 20 steps")
    if abs(to_mpf(alpha)) >= radius_lower_bound(spec)[0]:
        raise CriterionError("alpha must lie inside the disk of convergence")
    ns = list(range(max(n1, spec.exponents.ell0), n2 + 1, step))

    def one(n):
        rec = build_linear_form(spec, S, r, n, alpha, bits, polynomials=False, evaluate=False)
        from .linear_forms import t_series

        val = t_series(spec, S, r, n, 1 / alpha, bits).value
        with mpmath.workprec(bits):
            lt = float(mpmath.log(abs(val))) + _log_abs_int(rec.Delta_n) if val != 0 else float("-inf")
        return lt, _log_abs_int(rec.max_int_coefficient())

    # records are memoized inside the decomposer: build the largest one first
    build_linear_form(spec, S, r, ns[-1], alpha, bits, polynomials=False, evaluate=False)
    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, ns))
    else:
        results = [one(n) for n in ns]
    log_tau = [x[0] for x in results]
    log_coeff = [x[1] for x in results]
    # a straight line is used here: log Delta_n jumps with the lcm factors,
    # which makes the fit with log n and log log n terms ill-conditioned
    la = fit_rate(ns, log_tau)
    lb = fit_rate(ns, log_coeff)
    caveats = list(BASE_CAVEATS)
    caveats.append(f"window n in [{ns[0]}, {ns[-1]}] with step {step} at {bits} bits")
    cert = Certificate(spec.label, alpha, S, r, (n1, n2), bits, ns, log_tau, log_coeff, la, lb, 1, None, caveats)
    if la < 0 < lb:
        cert.bound = dimension_bound_log(la, lb, 1).value
    else:
        cert.caveats.append(
            f"no bound: fitted a0 = exp({la:.4g}) and b = exp({lb:.4g}) do not satisfy a0 < 1 < b"
        )
    return cert
