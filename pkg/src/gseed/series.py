"""Taylor coefficients of F and high-precision evaluation of the shifted series."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterator, Mapping, Sequence

import mpmath

from .operator import (
    DiffOperator,
    ExponentReport,
    ThetaForm,
    exponent_report,
    parse_operator,
    rational_root_data,
    theta_form,
)
from .poly import Poly, as_fraction


class SeriesError(ValueError):
    pass


class InconsistentInitialData(SeriesError):
    pass


class ConvergenceError(SeriesError):
    """Point outside the disk of convergence, or summation did not settle."""


CONSISTENCY_EXTRA = 5
MAX_TERMS = 1 << 18


def to_mpf(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


@dataclass(frozen=True)
class ComplexApprox:
    value: object  # mpf or mpc
    bits: int
    tail_margin: object
    terms: int = 0

    def __post_init__(self):
        if self.bits < 64:
            raise ValueError("bits must be at least 64")
        if self.tail_margin < 0:
            raise ValueError("tail_margin must be non-negative")

    def to_document(self) -> dict:
        from .report import mp_to_document

        return {
            "value": mp_to_document(self.value, self.bits),
            "bits": self.bits,
            "tail_margin": mp_to_document(self.tail_margin, self.bits),
            "terms": self.terms,
        }


class GFunctionSpec:
    """F = sum A_k z^k with L F = 0, fixed by A_0..A_K0.

    The coefficient cache is filled lazily and guarded by a lock so a spec can
    be shared between threads.
    """

    def __init__(self, tf: ThetaForm, initial: Sequence, label: str = ""):
        self.tf = tf
        self.initial = tuple(as_fraction(a) for a in initial)
        self.label = label
        if not self.initial:
            raise SeriesError("at least one initial coefficient is needed")
        self._lock = threading.Lock()
        self._cache: list = list(self.initial)
        self._mp_cache: dict = {}
        self._exponents: ExponentReport | None = None
        k0 = self.k0
        top = max((r for r in self.exponents.integer_at_zero if r >= 0), default=-1)
        if k0 < top:
            raise SeriesError(
                f"need A_0..A_{top} (largest integer root of the indicial polynomial at 0), got {k0 + 1} values"
            )
        # initial data must satisfy the recurrence wherever Q_0 vanishes too
        for N in range(k0 + 1):
            res = self._residual_at(N)
            if res != 0:
                raise InconsistentInitialData(f"recurrence violated at index {N} (residual {res})")
        self.coefficients(k0 + tf.ell + CONSISTENCY_EXTRA)

    @property
    def k0(self) -> int:
        return len(self.initial) - 1

    @property
    def operator(self) -> DiffOperator:
        return self.tf.operator

    @property
    def exponents(self) -> ExponentReport:
        if self._exponents is None:
            self._exponents = exponent_report(self.tf)
        return self._exponents

    def _residual_at(self, N: int) -> Fraction:
        cache = self._cache
        total = Fraction(0)
        for j, qj in enumerate(self.tf.q):
            if N - j >= 0:
                total += qj(N) * cache[N - j]
        return total

    def coefficients(self, N: int) -> list:
        """Exact A_0..A_N, from sum_j Q_j(N) A_(N-j) = 0."""
        if N < 0:
            raise SeriesError("N must be non-negative")
        if N < len(self._cache):
            return self._cache[: N + 1]
        with self._lock:
            cache = self._cache
            q = self.tf.q
            while len(cache) <= N:
                k = len(cache)
                lead = q[0](k)
                if lead == 0:
                    raise SeriesError(f"indicial value Q_0({k}) vanishes beyond the initial data")
                acc = Fraction(0)
                for j in range(1, len(q)):
                    if k - j >= 0:
                        acc += q[j](k) * cache[k - j]
                cache.append(-acc / lead)
            return cache[: N + 1]

    def coefficient(self, k: int) -> Fraction:
        return self.coefficients(k)[k]

    def mp_coefficients(self, N: int, prec: int) -> list:
        """A_0..A_N rounded to the given binary precision (cached per precision)."""
        with self._lock:
            lst = self._mp_cache.setdefault(prec, [])
        if len(lst) <= N:
            exact = self.coefficients(N)
            with mpmath.workprec(prec):
                with self._lock:
                    for k in range(len(lst), N + 1):
                        lst.append(to_mpf(exact[k]))
        return lst[: N + 1]

    def recurrence_residuals(self, N: int) -> list:
        """Exact residuals sum_j Q_j(k) A_(k-j) for k = 0..N (all zero)."""
        self.coefficients(N)
        return [self._residual_at(k) for k in range(N + 1)]

    def to_document(self) -> dict:
        doc = dict(self.operator.to_document()) if self.operator is not None else {}
        doc["initial"] = [str(a) for a in self.initial]
        doc["label"] = self.label
        return doc

    def __repr__(self) -> str:
        return f"GFunctionSpec({self.label or 'unnamed'})"


def make_spec(operator, initial: Sequence, label: str = "") -> GFunctionSpec:
    L = parse_operator(operator)
    return GFunctionSpec(theta_form(L), initial, label)


def spec_from_document(doc: Mapping) -> GFunctionSpec:
    if "initial" not in doc:
        raise SeriesError("spec document needs an 'initial' list")
    L = parse_operator(doc)
    return GFunctionSpec(theta_form(L), doc["initial"], doc.get("label", ""))


def load_spec(path) -> GFunctionSpec:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SeriesError(f"{path}: invalid JSON ({exc.msg})") from exc
    return spec_from_document(doc)


# ----------------------------------------------------------- singularities


@dataclass(frozen=True)
class RadiusInfo:
    radius: object  # mpf
    singularities: tuple  # mpc values, sorted by modulus then argument
    rational: tuple  # exactly known rational singularities


def singularities(tf_or_spec, bits: int = 128) -> RadiusInfo:
    """Nonzero roots of the leading coefficient of L, with R = min modulus."""
    tf = tf_or_spec.tf if isinstance(tf_or_spec, GFunctionSpec) else tf_or_spec
    lead = tf.operator.leading
    w = lead.valuation()
    reduced = Poly(lead.coeffs[w:])
    if reduced.degree < 1:
        raise SeriesError("leading coefficient has no nonzero root: F would be entire")
    data = rational_root_data(reduced)
    rational = tuple(r for r, _ in data.rational_roots)
    pts = []
    with mpmath.workprec(2 * bits):
        for r in rational:
            pts.append(mpmath.mpc(to_mpf(r)))
        for fac in data.unfactored:
            coeffs = [Fraction(c) for c in fac]
            roots = mpmath.polyroots([to_mpf(c) for c in reversed(coeffs)], maxsteps=200, extraprec=2 * bits)
            pts.extend(mpmath.mpc(x) for x in roots)
        # the same irreducible factor may appear with multiplicity
        uniq = []
        for p in pts:
            if all(abs(p - u) > mpmath.mpf(2) ** (-bits) for u in uniq):
                uniq.append(p)
        uniq.sort(key=lambda x: (abs(x), mpmath.arg(x)))
        radius = min(abs(x) for x in uniq)
    return RadiusInfo(radius, tuple(uniq), rational)


def radius_lower_bound(spec, bits: int = 128):
    info = singularities(spec, bits)
    return info.radius, info.singularities


def default_alpha(spec, scale: int = 1000) -> Fraction:
    """A rational approximation of R/2 from below."""
    R = radius_lower_bound(spec)[0]
    while True:
        a = Fraction(int(mpmath.floor(R / 2 * scale)), scale)
        if a > 0:
            return a
        scale *= 1000


# -------------------------------------------------------------- summation


def stabilized_sum(terms: Iterator, bits: int, first_check: int = 16, max_terms: int = MAX_TERMS):
    """Sum an iterator of mp numbers until three successive doublings settle.

    Returns (value, tail_margin, number_of_terms).  The caller sets the
    working precision.
    """
    tol = mpmath.mpf(2) ** (-bits + 8)
    total = mpmath.mpf(0)
    count = 0
    checkpoint = first_check
    last = None
    deltas: list = []
    for term in terms:
        total += term
        count += 1
        if count == checkpoint:
            if last is not None:
                deltas.append(abs(total - last))
                scale = abs(total)
                if len(deltas) >= 3 and scale != 0 and all(d <= tol * scale for d in deltas[-3:]):
                    return total, deltas[-1], count
                if len(deltas) >= 3 and scale == 0 and all(d == 0 for d in deltas[-3:]) and count >= 1024:
                    return total, mpmath.mpf(0), count
            last = total
            checkpoint *= 2
        if count >= max_terms:
            raise ConvergenceError(f"series did not stabilize within {max_terms} terms")
    return total, mpmath.mpf(0), count


def _check_inside(spec: GFunctionSpec, alpha: Fraction, bits: int):
    if alpha == 0:
        raise ConvergenceError("evaluation point must be nonzero")
    R = radius_lower_bound(spec, bits)[0]
    if abs(to_mpf(alpha)) >= R:
        raise ConvergenceError(f"|alpha| = {float(abs(alpha))} is not below the radius {float(R)}")


def _coefficient_terms(spec: GFunctionSpec, prec: int, weight: Callable, alpha_mp, start_power: int):
    """Yield A_k * weight(k) * alpha^(k + start_power) for k = 0, 1, ..."""
    block = 256
    k = 0
    apow = alpha_mp**start_power
    while True:
        coeffs = spec.mp_coefficients(k + block, prec)
        for kk in range(k, k + block):
            a = coeffs[kk]
            if a:
                yield a * weight(kk) * apow
            else:
                yield mpmath.mpf(0)
            apow *= alpha_mp
        k += block


def guard_bits(bits: int) -> int:
    return bits + 32 + bits // 4


def eval_shifted(spec: GFunctionSpec, n: int, s: int, alpha, bits: int = 128) -> ComplexApprox:
    """F_n^[s](alpha) = sum_k A_k alpha^(k+n) / (k+n)^s."""
    alpha = as_fraction(alpha)
    if n < 1 and s > 0:
        raise SeriesError("n must be at least 1 for s > 0")
    if s < 0:
        raise SeriesError("weight s must be non-negative")
    _check_inside(spec, alpha, bits)
    prec = guard_bits(bits)
    with mpmath.workprec(prec):
        a = to_mpf(alpha)
        if s == 0:
            weight = lambda k: 1
        else:
            weight = lambda k: mpmath.mpf(k + n) ** (-s)
        val, tail, count = stabilized_sum(_coefficient_terms(spec, prec, weight, a, n), bits)
    return ComplexApprox(val, bits, tail, count)


def eval_theta_power(spec: GFunctionSpec, j: int, alpha, bits: int = 128) -> ComplexApprox:
    """(theta^j F)(alpha) = sum_k k^j A_k alpha^k."""
    alpha = as_fraction(alpha)
    _check_inside(spec, alpha, bits)
    prec = guard_bits(bits)
    with mpmath.workprec(prec):
        a = to_mpf(alpha)
        weight = (lambda k: 1) if j == 0 else (lambda k: mpmath.mpf(k) ** j)
        val, tail, count = stabilized_sum(_coefficient_terms(spec, prec, weight, a, 0), bits)
    return ComplexApprox(val, bits, tail, count)


class Evaluator:
    """Memoized evaluations of F_n^[s](alpha) and (theta^j F)(alpha)."""

    def __init__(self, spec: GFunctionSpec, alpha, bits: int = 128):
        self.spec = spec
        self.alpha = as_fraction(alpha)
        self.bits = bits
        _check_inside(spec, self.alpha, bits)
        self._shifted: dict = {}
        self._theta: dict = {}

    def shifted(self, n: int, s: int) -> ComplexApprox:
        key = (n, s)
        if key not in self._shifted:
            self._shifted[key] = eval_shifted(self.spec, n, s, self.alpha, self.bits)
        return self._shifted[key]

    def theta(self, j: int) -> ComplexApprox:
        if j not in self._theta:
            self._theta[j] = eval_theta_power(self.spec, j, self.alpha, self.bits)
        return self._theta[j]
