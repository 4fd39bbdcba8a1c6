"""Exponential growth of the linear forms: saddle-point prediction and empirical checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .linear_forms import t_series
from .poly import as_fraction
from .series import GFunctionSpec, radius_lower_bound, singularities, to_mpf


class SaddleError(ValueError):
    pass


class NegativeCoefficients(ValueError):
    """The positivity bounds do not apply."""


def _saddle_poly(S: int, r: int, z):
    """Coefficients (highest degree first) of z t^(S+1) - (r - t)(t + 1)^S."""
    binom = [mpmath.binomial(S, i) for i in range(S + 1)]
    # (t+1)^S coefficients, lowest degree first
    low = [binom[i] for i in range(S + 1)]
    poly = [mpmath.mpc(0)] * (S + 2)  # lowest first
    poly[S + 1] += z
    for i, c in enumerate(low):
        poly[i] -= r * c
        poly[i + 1] += c
    return list(reversed(poly))


def saddle_residual(S: int, r: int, z, t):
    return z * t ** (S + 1) - (r - t) * (t + 1) ** S


def saddle_derivative(S: int, r: int, z, t):
    return (S + 1) * z * t**S + (t + 1) ** S - S * (r - t) * (t + 1) ** (S - 1)


def saddle_seed(S: int, r: int, z):
    return r - r * z * (mpmath.mpf(r) / (r + 1)) ** S


def _newton(S, r, z, t, bits, max_iter=200):
    tol = mpmath.mpf(2) ** (-bits)
    history = [t]
    for _ in range(max_iter):
        f = saddle_residual(S, r, z, t)
        d = saddle_derivative(S, r, z, t)
        if d == 0:
            return None, history
        step = f / d
        t = t - step
        history.append(t)
        if abs(step) <= tol * max(1, abs(t)):
            return t, history
    return None, history


def saddle_point(S: int, r: int, z, bits: int = 128):
    """The root of z t^(S+1) = (r - t)(t+1)^S with real part above 1/2."""
    if r < 1 or S < r:
        raise SaddleError("need r >= 1 and S >= r")
    with mpmath.workprec(bits + 32):
        z = mpmath.mpc(z)
        if not (0 < abs(z) < 1):
            raise SaddleError("need 0 < |z| < 1")
        tau, history = _newton(S, r, z, mpmath.mpc(saddle_seed(S, r, z)), bits + 16)
        if tau is None or tau.real <= 0.5:
            roots = mpmath.polyroots(_saddle_poly(S, r, z), maxsteps=400, extraprec=bits)
            right = [x for x in roots if mpmath.re(x) > 0.5]
            if len(right) != 1:
                raise SaddleError(f"expected one root with Re > 1/2, found {len(right)}; Newton iterates {history[-3:]}")
            tau, _ = _newton(S, r, z, mpmath.mpc(right[0]), bits + 16)
            if tau is None:
                raise SaddleError("Newton polishing failed")
        if tau.real <= 0.5:
            raise SaddleError(f"root {tau} has real part <= 1/2")
        res = abs(saddle_residual(S, r, z, tau))
        scale = abs(saddle_derivative(S, r, z, tau)) * abs(tau)
        if res > mpmath.mpf(2) ** (-bits // 2) * scale:
            raise SaddleError(f"residual {res} too large")
        return tau


def root_census(S: int, r: int, z, bits: int = 96) -> dict:
    """Count the roots of the saddle polynomial in Re < -1/2, Re > 1/2 and between."""
    with mpmath.workprec(bits):
        roots = mpmath.polyroots(_saddle_poly(S, r, mpmath.mpc(z)), maxsteps=400, extraprec=bits)
    left = sum(1 for x in roots if mpmath.re(x) < -0.5)
    right = sum(1 for x in roots if mpmath.re(x) > 0.5)
    return {"left": left, "right": right, "middle": len(roots) - left - right, "total": len(roots)}


@dataclass(frozen=True)
class PhiData:
    exp_phi: object  # (r - tau)^r / (tau + 1)^S
    exp_phi_alt: tuple  # the two companion expressions
    phi: object  # principal logarithm of exp_phi
    psi: object
    spread: object  # max relative disagreement of the three expressions


def phi_data(S: int, r: int, z, tau, bits: int = 128) -> PhiData:
    with mpmath.workprec(bits + 32):
        z = mpmath.mpc(z)
        tau = mpmath.mpc(tau)
        if abs(r - tau) < mpmath.mpf(2) ** (-bits // 2):
            raise SaddleError("r - tau vanishes: degenerate saddle")
        e1 = (r - tau) ** r / (tau + 1) ** S
        e2 = (z * tau ** (S + 1)) ** r / (tau + 1) ** (S * (r + 1))
        e3 = (r - tau) ** (r + 1) / (z * tau ** (S + 1))
        spread = max(abs(e2 - e1), abs(e3 - e1)) / abs(e1)
        psi = (S + 1) / tau + 1 / (r - tau) - S / (tau + 1)
        return PhiData(e1, (e2, e3), mpmath.log(e1), psi, spread)


@dataclass
class SaddleReport:
    S: int
    r: int
    alpha: Fraction
    xi: list
    z: list
    tau: list
    phi: list
    psi: list
    rho: list
    spread: list
    dominant: list
    a_pred: object
    upper: object
    warnings: list = field(default_factory=list)

    @property
    def log_a_pred(self):
        return mpmath.log(self.a_pred)

    def to_document(self) -> dict:
        def c(x):
            x = mpmath.mpc(x)
            return [mpmath.nstr(x.real, 30), mpmath.nstr(x.imag, 30)]

        return {
            "S": self.S,
            "r": self.r,
            "alpha": str(self.alpha),
            "singularities": [
                {"xi": c(x), "z": c(zz), "tau": c(t), "phi": c(p), "psi": c(ps),
                 "rho": mpmath.nstr(rh, 30), "eqspread": mpmath.nstr(sp, 5)}
                for x, zz, t, p, ps, rh, sp in zip(self.xi, self.z, self.tau, self.phi, self.psi, self.rho, self.spread)
            ],
            "dominant": list(self.dominant),
            "a_pred": mpmath.nstr(self.a_pred, 30),
            "log_a_pred": mpmath.nstr(self.log_a_pred, 30),
            "upper_rate": mpmath.nstr(self.upper, 30),
            "within_upper": bool(self.a_pred <= self.upper),
            "warnings": list(self.warnings),
        }


def predict_growth(spec: GFunctionSpec, S: int, r: int, alpha, bits: int = 128,
                   collision_tol: float = 1e-12) -> SaddleReport:
    alpha = as_fraction(alpha)
    info = singularities(spec, bits)
    with mpmath.workprec(bits + 32):
        a = to_mpf(alpha)
        xs, zs, taus, phis, psis, rhos, spreads = [], [], [], [], [], [], []
        for xi in info.singularities:
            zj = -a / xi
            tau = saddle_point(S, r, zj, bits)
            pd = phi_data(S, r, zj, tau, bits)
            xs.append(xi)
            zs.append(zj)
            taus.append(tau)
            phis.append(pd.phi)
            psis.append(pd.psi)
            rhos.append(abs(pd.exp_phi))
            spreads.append(pd.spread)
        top = max(rhos)
        dominant = [i for i, x in enumerate(rhos) if abs(x - top) <= collision_tol * top]
        upper = mpmath.mpf(1) / mpmath.mpf(r) ** (S - r)
        warnings = []
        for i in range(len(rhos)):
            for j in range(i + 1, len(rhos)):
                e_i = mpmath.exp(phis[i])
                e_j = mpmath.exp(phis[j])
                if abs(e_i - e_j) <= collision_tol * abs(e_i):
                    warnings.append(f"growth constants of singularities {i} and {j} coincide within tolerance")
        if len(dominant) > 1:
            warnings.append("several singularities share the dominant rate")
        return SaddleReport(S, r, alpha, xs, zs, taus, phis, psis, rhos, spreads, dominant, top, upper, warnings)


# ---------------------------------------------------------- empirical growth


@dataclass
class GrowthEstimate:
    n1: int
    n2: int
    n_values: list
    log_abs: list  # log |T_n|
    signs: list
    log_a_emp: float
    kappa: float
    lam: float
    residual_spread: float

    @property
    def samples(self) -> list:
        return [v / n for n, v in zip(self.n_values, self.log_abs)]

    def to_document(self) -> dict:
        return {
            "window": [self.n1, self.n2],
            "float_bits": 53,
            "log_a_emp": self.log_a_emp,
            "kappa": self.kappa,
            "lambda": self.lam,
            "residual_spread": self.residual_spread,
            "samples": [[n, v] for n, v in zip(self.n_values, self.samples)],
            "signs": self.signs,
        }


def fit_growth(ns: Sequence[int], logs: Sequence[float]):
    """Least squares for log|T_n| ~ n log a + kappa log n + lambda log log n + c."""
    ns = np.asarray(ns, dtype=float)
    y = np.asarray(logs, dtype=float)
    design = np.column_stack([ns, np.log(ns), np.log(np.log(ns)), np.ones_like(ns)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ coef
    spread = float(np.max(np.abs(fitted - y))) if len(y) else 0.0
    return float(coef[0]), float(coef[1]), float(coef[2]), spread


def fit_rate(ns: Sequence[int], logs: Sequence[float]) -> float:
    """Slope of a straight-line fit of log values against n."""
    ns = np.asarray(ns, dtype=float)
    design = np.column_stack([ns, np.ones_like(ns)])
    coef, *_ = np.linalg.lstsq(design, np.asarray(logs, dtype=float), rcond=None)
    return float(coef[0])


def envelope(ns: Sequence[int], logs: Sequence[float], width: int = 4):
    """Running maximum of log|T_n| over blocks, to smooth sign oscillations."""
    out_n, out_y = [], []
    for i in range(0, len(ns) - width + 1):
        block = logs[i:i + width]
        k = int(np.argmax(block))
        out_n.append(ns[i + k])
        out_y.append(block[k])
    return out_n, out_y


def empirical_growth(spec: GFunctionSpec, S: int, r: int, alpha, n1: int, n2: int, bits: int = 512,
                     use_envelope: bool = False) -> GrowthEstimate:
    if n2 - n1 < 20:
        raise ValueError("window must contain at least 20 steps")
    alpha = as_fraction(alpha)
    z = 1 / alpha
    ns, logs, signs = [], [], []
    for n in range(n1, n2 + 1):
        val = t_series(spec, S, r, n, z, bits).value
        if val == 0:
            raise ValueError(f"T_{n} vanished at {bits} bits; increase precision")
        ns.append(n)
        with mpmath.workprec(bits):
            logs.append(float(mpmath.log(abs(val))))
        signs.append(1 if val > 0 else -1)
    fit_n, fit_y = envelope(ns, logs) if use_envelope else (ns, logs)
    la, kappa, lam, spread = fit_growth(fit_n, fit_y)
    return GrowthEstimate(n1, n2, ns, logs, signs, la, kappa, lam, spread)


# ---------------------------------------------------------- positive case


@dataclass(frozen=True)
class SandwichReport:
    lower: object
    upper: object
    n_values: tuple
    rates: tuple  # log|T_n| / n
    holds: bool
    failures: tuple

    def to_document(self) -> dict:
        return {
            "lower_rate": mpmath.nstr(self.lower, 20),
            "upper_rate": mpmath.nstr(self.upper, 20),
            "holds": self.holds,
            "failures": list(self.failures),
            "rates": [[n, float(x)] for n, x in zip(self.n_values, self.rates)],
        }


def sandwich_rates(S: int, r: int, z_real, D, corrected: bool = False):
    """The two n-th root bounds: lower liminf and upper limsup.

    With corrected=True the lower rate carries the extra factor (r/(r+1))^r
    that Stirling's formula gives for n!^r (rn)! / ((r+1)n)!^r.
    """
    z = to_mpf(as_fraction(z_real))
    D = to_mpf(as_fraction(D))
    lower = (1 / (D**r * z**r)) * (mpmath.mpf(r) / (r + 1)) ** (r * S) / mpmath.mpf(r + 1) ** (S - r)
    if corrected:
        lower *= (mpmath.mpf(r) / (r + 1)) ** r
    upper = 1 / mpmath.mpf(r) ** (S - r)
    return lower, upper


def nonneg_bounds(spec: GFunctionSpec, S: int, r: int, z_real, D_emp, n_values: Sequence[int] = (),
                  bits: int = 256, check_upto: int = 200, corrected: bool = False) -> SandwichReport:
    if r < 1:
        raise ValueError("the upper rate needs r >= 1")
    z_real = as_fraction(z_real)
    coeffs = spec.coefficients(check_upto)
    negative = [k for k, a in enumerate(coeffs) if a < 0]
    if negative:
        raise NegativeCoefficients(f"A_k < 0 at k = {negative[:5]}")
    if all(a == 0 for a in coeffs[spec.k0 + 1:]):
        raise NegativeCoefficients("F looks like a polynomial; the lower bound needs infinitely many A_k != 0")
    R = radius_lower_bound(spec)[0]
    if to_mpf(z_real) * R <= 1:
        raise ValueError("need z > 1/R")
    lower, upper = sandwich_rates(S, r, z_real, D_emp, corrected)
    rates, fails = [], []
    with mpmath.workprec(bits):
        ll, lu = mpmath.log(lower), mpmath.log(upper)
        for n in n_values:
            val = t_series(spec, S, r, n, z_real, bits).value
            rate = mpmath.log(abs(val)) / n
            rates.append(rate)
            if not (ll <= rate <= lu):
                fails.append(n)
    return SandwichReport(lower, upper, tuple(n_values), tuple(rates), not fails, tuple(fails))


# ------------------------------------------------------------ real integral


def derivative_series(spec: GFunctionSpec, order: int, x, prec: int):
    """F^(order)(x) = sum_k (k-order+1)_order A_k x^(k-order), summed termwise."""
    coeffs = _derivative_coefficients(spec, order, prec)
    eps = mpmath.mpf(2) ** (-prec)
    total = mpmath.mpf(0)
    power = mpmath.mpf(1)
    small = 0
    k = 0
    while True:
        if k >= len(coeffs):
            coeffs = _derivative_coefficients(spec, order, prec, 2 * len(coeffs))
        term = coeffs[k] * power
        total += term
        if abs(term) <= eps * abs(total):
            small += 1
            if small >= 4:
                return total
        else:
            small = 0
        power *= x
        k += 1
        if k > 1 << 16:
            raise ValueError("derivative series did not settle")


_DERIV_CACHE: dict = {}


def _derivative_coefficients(spec, order, prec, length=256):
    key = (id(spec), order, prec)
    got = _DERIV_CACHE.get(key)
    if got is not None and len(got) >= length:
        return got
    A = spec.coefficients(length + order)
    with mpmath.workprec(prec):
        out = []
        for k in range(length):
            w = 1
            for t in range(order):
                w *= k + order - t
            out.append(to_mpf(Fraction(w) * A[k + order]))
    _DERIV_CACHE[key] = out
    return out


def real_integral(spec: GFunctionSpec, S: int, r: int, n: int, z_real, bits: int = 96):
    """z^(-rn)/n!^r * integral over [0,1]^S of F^(rn)(t_1..t_S/z) prod t^(rn) (1-t)^n dt."""
    if S not in (1, 2):
        raise ValueError("quadrature is provided for S = 1 and S = 2")
    z_real = as_fraction(z_real)
    rn = r * n
    with mpmath.workprec(bits):
        z = to_mpf(z_real)

        def weight(t):
            return t**rn * (1 - t) ** n

        if S == 1:
            f = lambda t: derivative_series(spec, rn, t / z, bits) * weight(t)
            val = mpmath.quad(f, [0, 1])
        else:
            f = lambda t1, t2: derivative_series(spec, rn, t1 * t2 / z, bits) * weight(t1) * weight(t2)
            val = mpmath.quad(f, [0, 1], [0, 1])
        return val * z ** (-rn) / mpmath.factorial(n) ** r


def real_integral_check(spec: GFunctionSpec, S: int, r: int, n: int, z_real, bits: int = 96):
    """|integral - series| for the real integral representation."""
    integral = real_integral(spec, S, r, n, z_real, bits)
    series = t_series(spec, S, r, n, as_fraction(z_real), max(bits, 64)).value
    with mpmath.workprec(bits):
        return abs(integral - series)
