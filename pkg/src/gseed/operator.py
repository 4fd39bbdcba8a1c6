"""Differential operators: parsing, theta-form and structural invariants.

Operators are handled internally as elements of the Weyl algebra, stored as
``{(i, k): c}`` meaning ``c * z^i * D^k`` with every power of ``z`` written to
the left of the powers of ``D = d/dz``.  ``T`` stands for ``z*D``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import comb, lcm, perm
from typing import Mapping, Sequence

from .poly import Poly, as_fraction, falling_factorial_poly


class OperatorError(ValueError):
    """Invalid operator input or operator outside the supported class."""


class OperatorSyntaxError(OperatorError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class NotFuchsianError(OperatorError):
    """The operator has no theta-form with indices ranging over 0..delta-omega."""


class PolynomialSolutionError(OperatorError):
    """delta == omega: the theory needs at least one step of recurrence."""


# ---------------------------------------------------------------- Weyl algebra

Weyl = dict  # {(i, k): Fraction}


def _weyl_clean(a: Mapping) -> Weyl:
    return {key: c for key, c in a.items() if c != 0}


def weyl_add(a: Mapping, b: Mapping, sign: int = 1) -> Weyl:
    out = dict(a)
    for key, c in b.items():
        out[key] = out.get(key, Fraction(0)) + sign * c
    return _weyl_clean(out)


def weyl_scale(a: Mapping, c) -> Weyl:
    c = as_fraction(c)
    return _weyl_clean({key: c * v for key, v in a.items()})


def weyl_mul(a: Mapping, b: Mapping) -> Weyl:
    """Product in the Weyl algebra, using D^p z^q = sum_m C(p,m) q!/(q-m)! z^(q-m) D^(p-m)."""
    out: dict = {}
    for (i, p), c1 in a.items():
        for (q, k), c2 in b.items():
            for m in range(min(p, q) + 1):
                coeff = c1 * c2 * comb(p, m) * perm(q, m)
                key = (i + q - m, p - m + k)
                out[key] = out.get(key, Fraction(0)) + coeff
    return _weyl_clean(out)


def weyl_pow(a: Mapping, e: int) -> Weyl:
    result: Weyl = {(0, 0): Fraction(1)}
    for _ in range(e):
        result = weyl_mul(result, a)
    return result


# ---------------------------------------------------------------------- parser

_Z = {(1, 0): Fraction(1)}
_D = {(0, 1): Fraction(1)}
_THETA = {(1, 1): Fraction(1)}


class _Parser:
    """Recursive descent over: expr := term (('+'|'-') term)*;
    term := unary (('*'|'/')? unary)*; unary := '-' unary | power;
    power := atom ('^' integer)?; atom := integer | z | D | T | '(' expr ')'.
    """

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str, pos: int | None = None):
        raise OperatorSyntaxError(message, self.pos if pos is None else pos, self.text)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Weyl:
        if not self.text.strip():
            self.error("empty operator expression", 0)
        value = self.expr()
        if self.peek():
            self.error(f"unexpected character {self.peek()!r}")
        return value

    def expr(self) -> Weyl:
        value = self.term()
        while self.peek() in ("+", "-") and self.peek():
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.term()
            value = weyl_add(value, rhs, 1 if op == "+" else -1)
        return value

    def _starts_atom(self, ch: str) -> bool:
        return bool(ch) and (ch.isdigit() or ch in "zDT(")

    def term(self) -> Weyl:
        value = self.unary()
        while True:
            ch = self.peek()
            if ch == "*":
                self.pos += 1
                value = weyl_mul(value, self.unary())
            elif ch == "/":
                start = self.pos
                self.pos += 1
                rhs = self.unary()
                const = rhs.get((0, 0), Fraction(0))
                if set(rhs) - {(0, 0)} or const == 0:
                    self.error("division only by a nonzero constant", start)
                value = weyl_scale(value, 1 / const)
            elif self._starts_atom(ch):
                # implicit multiplication, e.g. "3z" or "(1-z)D"
                value = weyl_mul(value, self.unary())
            else:
                return value

    def unary(self) -> Weyl:
        if self.peek() == "-":
            self.pos += 1
            return weyl_scale(self.unary(), -1)
        if self.peek() == "+":
            self.pos += 1
            return self.unary()
        return self.power()

    def power(self) -> Weyl:
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            self.skip()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if start == self.pos:
                self.error("expected a non-negative integer exponent")
            base = weyl_pow(base, int(self.text[start:self.pos]))
        return base

    def atom(self) -> Weyl:
        ch = self.peek()
        if not ch:
            self.error("unexpected end of input")
        if ch.isdigit():
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            return {(0, 0): Fraction(int(self.text[start:self.pos]))}
        if ch == "z":
            self.pos += 1
            return dict(_Z)
        if ch == "D":
            self.pos += 1
            return dict(_D)
        if ch == "T":
            self.pos += 1
            return dict(_THETA)
        if ch == "(":
            self.pos += 1
            value = self.expr()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return value
        self.error(f"unexpected character {ch!r}")


def parse_weyl(text: str) -> Weyl:
    return _Parser(text).parse()


# ------------------------------------------------------------- DiffOperator


@dataclass(frozen=True)
class DiffOperator:
    """L = sum_j P_j(z) (d/dz)^j with P_mu != 0 and mu >= 1."""

    coeffs: tuple

    def __post_init__(self):
        cs = list(self.coeffs)
        while cs and cs[-1].is_zero():
            cs.pop()
        if not cs:
            raise OperatorError("zero operator")
        if len(cs) < 2:
            raise OperatorError("operator of order 0 (no derivative)")
        object.__setattr__(self, "coeffs", tuple(cs))

    @property
    def mu(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> Poly:
        return self.coeffs[-1]

    def to_weyl(self) -> Weyl:
        out = {}
        for k, p in enumerate(self.coeffs):
            for i, c in enumerate(p.coeffs):
                if c != 0:
                    out[(i, k)] = c
        return out

    @classmethod
    def from_weyl(cls, w: Mapping) -> "DiffOperator":
        if not w:
            raise OperatorError("zero operator")
        mu = max(k for (_, k) in w)
        cols = []
        for k in range(mu + 1):
            deg = max((i for (i, kk) in w if kk == k), default=-1)
            cols.append(Poly([w.get((i, k), 0) for i in range(deg + 1)]))
        return cls(tuple(cols))

    def apply_monomial(self, p: int) -> Poly:
        """L applied to z^p, as a polynomial in z (p >= 0)."""
        if p < 0:
            raise OperatorError("monomial exponent must be non-negative")
        out = Poly()
        for k, coeff in enumerate(self.coeffs):
            if k > p:
                break
            out = out + coeff * Poly.monomial(p - k, perm(p, k))
        return out

    def to_document(self) -> dict:
        return {"P": [p.to_strings() for p in self.coeffs]}

    def __str__(self) -> str:
        parts = []
        for k, p in enumerate(self.coeffs):
            if p.is_zero():
                continue
            d = "" if k == 0 else ("*D" if k == 1 else f"*D^{k}")
            parts.append(f"({p.pretty('z')}){d}")
        return " + ".join(parts)


def parse_operator(text) -> DiffOperator:
    """Parse an expression string or a coefficient-list document.

    Accepted inputs: an expression such as ``"(1-z)*D - 1"`` over the tokens
    z, D, T (theta), integers, ``+ - * / ^`` and parentheses; a JSON string or
    mapping ``{"P": [[...], ...]}`` with rational strings, lowest degree first;
    or a mapping ``{"operator": "<expression>"}``.
    """
    if isinstance(text, DiffOperator):
        return text
    doc = text
    if isinstance(text, str):
        stripped = text.strip()
        if stripped.startswith("{"):
            try:
                doc = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise OperatorSyntaxError(f"invalid JSON: {exc.msg}", exc.pos, text) from exc
        else:
            return DiffOperator.from_weyl(parse_weyl(text))
    if isinstance(doc, Mapping):
        if "P" in doc:
            try:
                polys = tuple(Poly([as_fraction(c) for c in col]) for col in doc["P"])
            except (TypeError, ValueError, ZeroDivisionError) as exc:
                raise OperatorError(f"bad coefficient in P: {exc}") from exc
            if polys and polys[-1].is_zero():
                raise OperatorError("leading coefficient P_mu is zero")
            return DiffOperator(polys)
        if "operator" in doc:
            return parse_operator(doc["operator"])
    raise OperatorError("operator document needs an expression or a 'P' list")


# ---------------------------------------------------------------- theta-form


@dataclass(frozen=True)
class ThetaForm:
    """clearing_constant * z^(mu-omega) * L = sum_j z^j Q_j(theta + j)."""

    q: tuple
    clearing_constant: int
    mu: int
    delta: int
    omega: int
    operator: DiffOperator | None = field(default=None, compare=False)

    @property
    def ell(self) -> int:
        return self.delta - self.omega

    @property
    def degrees(self) -> tuple:
        return tuple(p.degree for p in self.q)

    def apply_monomial(self, p: int) -> dict:
        """sum_j z^j Q_j(theta+j) applied to z^p, as {exponent: coefficient}."""
        return {p + j: qj(p + j) for j, qj in enumerate(self.q) if qj(p + j) != 0}

    def to_document(self) -> dict:
        return {
            "Q": [p.to_strings() for p in self.q],
            "clearing_constant": str(self.clearing_constant),
            "mu": self.mu,
            "delta": self.delta,
            "omega": self.omega,
            "ell": self.ell,
        }


def theta_expansion(L: DiffOperator) -> dict:
    """Return {e: R_e} with L = sum_e z^e R_e(theta).

    Uses z^i D^k = z^(i-k) * X(X-1)...(X-k+1) evaluated at theta.
    """
    out: dict = {}
    for k, pk in enumerate(L.coeffs):
        if pk.is_zero():
            continue
        fall = falling_factorial_poly(k)
        for i, c in enumerate(pk.coeffs):
            if c == 0:
                continue
            e = i - k
            out[e] = out.get(e, Poly()) + fall * c
    return {e: p for e, p in out.items() if not p.is_zero()}


def theta_form(L: DiffOperator) -> ThetaForm:
    mu = L.mu
    lead = L.leading
    omega = lead.valuation()
    delta = lead.degree
    ell = delta - omega
    parts = theta_expansion(L)
    lo, hi = omega - mu, delta - mu
    outside = sorted(e for e in parts if e < lo or e > hi)
    if outside:
        raise NotFuchsianError(
            f"theta-expansion has z-powers {outside} outside [{lo}, {hi}]; "
            "the operator is not of the required fuchsian shape"
        )
    if ell == 0:
        raise PolynomialSolutionError("delta == omega (ell = 0): operator rejected")
    alpha = reduce(lcm, (p.denominator_lcm() for p in parts.values()), 1)
    q = []
    for j in range(ell + 1):
        r = parts.get(j + lo, Poly())
        q.append((r * alpha).shift(-j))
    tf = ThetaForm(tuple(q), alpha, mu, delta, omega, L)
    if tf.q[0].degree != mu or tf.q[ell].degree != mu:
        raise NotFuchsianError("indicial polynomials at 0 or infinity have degree below mu")
    return tf


def theta_form_from_q(q: Sequence, mu: int | None = None, omega: int = 0) -> ThetaForm:
    """Wrap given Q_0..Q_ell (no operator attached), e.g. for property tests."""
    q = tuple(p if isinstance(p, Poly) else Poly(p) for p in q)
    mu = max(p.degree for p in q) if mu is None else mu
    return ThetaForm(q, 1, mu, omega + len(q) - 1, omega, None)


def check_reconstruction(tf: ThetaForm, powers: Sequence[int]) -> bool:
    """Compare clearing_constant * z^(mu-omega) * L z^p with the theta-form on z^p."""
    L = tf.operator
    shift = tf.mu - tf.omega
    for p in powers:
        lhs = L.apply_monomial(p) * tf.clearing_constant
        lhs_dict = {i + shift: c for i, c in enumerate(lhs.coeffs) if c != 0}
        if lhs_dict != tf.apply_monomial(p):
            return False
    return True


# ------------------------------------------------------------ exponent data


@dataclass(frozen=True)
class RootData:
    rational_roots: tuple  # (root, multiplicity) pairs, sorted
    unfactored: tuple  # irreducible factors of degree >= 2, as coefficient strings

    @property
    def integer_roots(self) -> tuple:
        out = []
        for root, mult in self.rational_roots:
            if root.denominator == 1:
                out.extend([int(root)] * mult)
        return tuple(out)

    def roots_with_multiplicity(self) -> list:
        out = []
        for root, mult in self.rational_roots:
            out.extend([root] * mult)
        return out

    def to_document(self) -> dict:
        return {
            "rational_roots": [[str(r), m] for r, m in self.rational_roots],
            "unfactored": [list(f) for f in self.unfactored],
        }


def rational_root_data(p: Poly) -> RootData:
    """Factor p over Q; linear factors give roots, the rest is reported."""
    import sympy

    x = sympy.Symbol("x")
    expr = sum(sympy.Rational(c.numerator, c.denominator) * x**i for i, c in enumerate(p.coeffs))
    _, factors = sympy.factor_list(sympy.Poly(expr, x, domain="QQ"))
    roots = []
    others = []
    for fac, mult in factors:
        coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(fac.all_coeffs())]
        if len(coeffs) == 2:
            roots.append((-coeffs[0] / coeffs[1], mult))
        elif len(coeffs) > 2:
            for _ in range(mult):
                others.append(tuple(str(c) for c in coeffs))
    roots.sort()
    return RootData(tuple(roots), tuple(sorted(others)))


@dataclass(frozen=True)
class ExponentReport:
    at_zero: RootData
    at_infinity: RootData
    ell: int

    @property
    def integer_at_zero(self) -> tuple:
        return self.at_zero.integer_roots

    @property
    def integer_at_infinity(self) -> tuple:
        return self.at_infinity.integer_roots

    @property
    def ell0(self) -> int:
        return max((self.ell,) + self.integer_at_infinity)

    @property
    def m_min(self) -> int:
        return self.ell0 - self.ell + 1

    def to_document(self) -> dict:
        return {
            "at_zero": self.at_zero.to_document(),
            "at_infinity": self.at_infinity.to_document(),
            "integer_at_zero": list(self.integer_at_zero),
            "integer_at_infinity": list(self.integer_at_infinity),
            "ell0": self.ell0,
            "m_min": self.m_min,
        }


def exponent_report(tf: ThetaForm) -> ExponentReport:
    if tf.ell < 1:
        raise PolynomialSolutionError("exponent report needs ell >= 1")
    at_zero = rational_root_data(tf.q[0])
    at_inf = rational_root_data(tf.q[tf.ell].compose_affine(-1, tf.ell))
    return ExponentReport(at_zero, at_inf, tf.ell)


@dataclass(frozen=True)
class StructureSummary:
    mu: int
    delta: int
    omega: int
    ell: int
    ell0: int
    m_min: int

    def to_document(self) -> dict:
        return dict(self.__dict__)


def structure_summary(tf: ThetaForm) -> StructureSummary:
    rep = exponent_report(tf)
    return StructureSummary(tf.mu, tf.delta, tf.omega, tf.ell, rep.ell0, rep.m_min)


# ------------------------------------------------------------ constructors


def theta_poly_weyl(p: Poly) -> Weyl:
    """Weyl element of p(theta)."""
    out: Weyl = {}
    power: Weyl = {(0, 0): Fraction(1)}
    for c in p.coeffs:
        if c != 0:
            out = weyl_add(out, weyl_scale(power, c))
        power = weyl_mul(power, _THETA)
    return out


def hypergeometric_operator(a: Sequence, b: Sequence) -> DiffOperator:
    """theta * prod(theta + b_j - 1) - z * prod(theta + a_i), in d/dz form."""
    a = [as_fraction(x) for x in a]
    b = [as_fraction(x) for x in b]
    if len(a) != len(b) + 1:
        raise OperatorError("need len(a) == len(b) + 1")
    for bj in b:
        if bj <= 0 and bj.denominator == 1:
            raise OperatorError(f"lower parameter {bj} is a non-positive integer")
    left = Poly.x()
    for bj in b:
        left = left * Poly([bj - 1, 1])
    right = Poly([1])
    for ai in a:
        right = right * Poly([ai, 1])
    w = weyl_add(theta_poly_weyl(left), weyl_mul(_Z, theta_poly_weyl(right)), -1)
    return DiffOperator.from_weyl(w)


def analyze(text) -> tuple:
    """Parse, build theta-form and exponent data in one call."""
    L = parse_operator(text)
    tf = theta_form(L)
    return L, tf, exponent_report(tf)
