"""Serialization helpers: exact values as strings, mp numbers with their precision."""

from __future__ import annotations

import json
from fractions import Fraction

import mpmath

REPORT_VERSION = 1


def mp_to_document(x, bits: int) -> dict:
    """Encode an mpf or mpc as mantissa/exponent pairs plus a decimal preview."""
    if isinstance(x, mpmath.mpc) or isinstance(x, complex):
        x = mpmath.mpc(x)
        return {
            "real": mp_to_document(x.real, bits),
            "imag": mp_to_document(x.imag, bits),
        }
    x = mpmath.mpf(x)
    man, exp = mpmath.frexp(x) if x != 0 else (mpmath.mpf(0), 0)
    with mpmath.workprec(bits):
        mant_int = int(mpmath.nint(man * mpmath.mpf(2) ** bits)) if x != 0 else 0
    digits = max(15, int(bits * 0.30103))
    return {
        "mantissa": str(mant_int),
        "exponent": int(exp) - bits if x != 0 else 0,
        "bits": bits,
        "decimal": mpmath.nstr(x, min(digits, 40)),
    }


def exact(x) -> str:
    return str(Fraction(x))


def _default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (mpmath.mpf, mpmath.mpc)):
        return mp_to_document(obj, mpmath.mp.prec)
    if hasattr(obj, "to_document"):
        return obj.to_document()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(doc: dict) -> str:
    """Deterministic JSON: sorted keys, fixed separators."""
    body = {"version": REPORT_VERSION, **doc}
    return json.dumps(body, default=_default, sort_keys=True, indent=2) + "\n"
