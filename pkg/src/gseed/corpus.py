"""Bundled example corpus and the golden/identity check suite over it."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .decomposition import decompose, recurrence_consistency, verify_decomposition
from .operator import (
    OperatorError,
    check_reconstruction,
    exponent_report,
    hypergeometric_operator,
    parse_operator,
    theta_form,
)
from .recurrence import casoratian, homogeneous_basis, safe_start
from .series import Evaluator, GFunctionSpec, SeriesError, default_alpha, spec_from_document

DECOMPOSITION_TOL = 1e-25


def corpus_dir() -> Path:
    return Path(str(resources.files("gseed") / "corpus"))


def _read(directory: Path, name: str) -> dict:
    return json.loads((directory / name).read_text())


def golden_examples(directory: Path | None = None) -> list:
    return _read(directory or corpus_dir(), "golden.json")["examples"]


def golden_operator(example: dict):
    if "hypergeometric" in example:
        h = example["hypergeometric"]
        return hypergeometric_operator(h["a"], h["b"])
    return parse_operator(example["operator"])


def load_corpus_spec(name: str, directory: Path | None = None) -> GFunctionSpec:
    return spec_from_document(_read(directory or corpus_dir(), f"{name}.json"))


def corpus_specs(directory: Path | None = None) -> dict:
    directory = directory or corpus_dir()
    names = _read(directory, "golden.json")["specs"]
    return {name: load_corpus_spec(name, directory) for name in names}


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def to_document(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class CorpusReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def add(self, name: str, passed: bool, detail: str = ""):
        self.checks.append(CheckResult(name, bool(passed), detail))

    def to_document(self) -> dict:
        return {
            "passed": self.passed,
            "total": len(self.checks),
            "failures": self.failures,
            "checks": [c.to_document() for c in self.checks],
        }


def _golden_check(report: CorpusReport, example: dict):
    name = f"golden:{example['name']}"
    try:
        tf = theta_form(golden_operator(example))
        rep = exponent_report(tf)
    except OperatorError as exc:
        report.add(name, False, str(exc))
        return
    got = {"ell0": rep.ell0, "ell": tf.ell, "mu": tf.mu, "delta": tf.delta, "omega": tf.omega}
    bad = []
    for key, want in example["expected"].items():
        if key == "at_infinity":
            have = sorted(Fraction(x) for x in rep.at_infinity.roots_with_multiplicity())
            if rep.at_infinity.unfactored or have != sorted(Fraction(x) for x in want):
                bad.append(f"at_infinity={[str(x) for x in have]} expected {want}")
        elif got[key] != want:
            bad.append(f"{key}={got[key]} expected {want}")
    report.add(name, not bad, "; ".join(bad))


def _spec_checks(report: CorpusReport, name: str, doc: dict, bits: int):
    prefix = f"spec:{name}"
    try:
        spec = spec_from_document(doc)
    except (OperatorError, SeriesError) as exc:
        report.add(f"{prefix}:load", False, str(exc))
        return
    report.add(f"{prefix}:load", True)
    tf = spec.tf
    report.add(f"{prefix}:reconstruction", check_reconstruction(tf, range(12)))
    want = [Fraction(x) for x in doc.get("coefficients", [])]
    if want:
        have = spec.coefficients(len(want) - 1)[: len(want)]
        diff = [k for k, (a, b) in enumerate(zip(have, want)) if a != b]
        report.add(f"{prefix}:coefficients", not diff, f"mismatch at k={diff}" if diff else "")
    res = spec.recurrence_residuals(40)
    report.add(f"{prefix}:coefficient-recurrence", all(r == 0 for r in res))
    # Casoratian: determinant form against the one-step law
    m = safe_start(tf)
    try:
        cas = casoratian(homogeneous_basis(tf, m, m + 30))
        report.add(f"{prefix}:casoratian", cas.agrees())
    except ValueError as exc:
        report.add(f"{prefix}:casoratian", False, str(exc))
    ok = all(recurrence_consistency(spec, s, n) for s in (1, 2) for n in range(1, 5))
    report.add(f"{prefix}:recurrence-consistency", ok)
    alpha = default_alpha(spec)
    ev = Evaluator(spec, alpha, bits)
    worst = max(
        float(verify_decomposition(spec, decompose(spec, n, s), alpha, bits, ev))
        for s in (1, 2) for n in range(1, 7)
    )
    report.add(f"{prefix}:decomposition", worst < DECOMPOSITION_TOL, f"worst residual {worst:.3e} at alpha={alpha}")


def corpus_check(directory: Path | None = None, bits: int = 128) -> CorpusReport:
    """Golden structural values plus exact and numeric identities on every bundled spec."""
    directory = Path(directory) if directory is not None else corpus_dir()
    report = CorpusReport()
    golden = _read(directory, "golden.json")
    for example in golden["examples"]:
        _golden_check(report, example)
    for name in golden["specs"]:
        _spec_checks(report, name, _read(directory, f"{name}.json"), bits)
    return report
