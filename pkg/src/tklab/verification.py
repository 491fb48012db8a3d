"""Exact regression suite over the reference counterexamples and constructions.

Each check carries a short anchor tag naming the example or result it
reproduces.  Every check runs; the first failure is also reported by name.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from . import kernels, properties
from .kernels import ProductKernelSpec, constant_kernel, delta_kernel, signed_delta_kernel
from .measure import SignedMeasureTensor, i_class_element, product_measure, report_index
from .witness import constructions, verify_witness

FAULTS = ("example2-w1",)


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    passed: bool
    detail: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "passed": self.passed, "detail": self.detail}


@dataclass(frozen=True)
class SuiteReport:
    checks: tuple

    @property
    def failed(self) -> list:
        return [c for c in self.checks if not c.passed]

    @property
    def ok(self) -> bool:
        return not self.failed

    @property
    def first_failure(self) -> str | None:
        return self.failed[0].name if self.failed else None

    def to_json(self) -> dict:
        return {
            "checks": [c.to_json() for c in self.checks],
            "passed": len(self.checks) - len(self.failed),
            "failed": len(self.failed),
            "first_failure": self.first_failure,
        }

    def to_markdown(self) -> str:
        lines = ["| check | anchor | result |", "|---|---|---|"]
        for c in self.checks:
            lines.append(f"| {c.name} | {c.anchor} | {'PASS' if c.passed else 'FAIL'} |")
        lines.append("")
        lines.append(f"{len(self.checks) - len(self.failed)} passed, {len(self.failed)} failed")
        return "\n".join(lines) + "\n"


def factorizing_grid(count: int = 50) -> list:
    """First ``count`` admissible ``(a, b)`` on the grid ``{i/10}`` with ``0 < a + b <= 1``."""
    pts = [
        (Fraction(i, 10), Fraction(j, 10))
        for i, j in itertools.product(range(11), repeat=2)
        if 0 < i + j <= 10
    ]
    return pts[:count]


def _fmt(values) -> str:
    return "[" + ", ".join(str(v) for v in values) + "]"


def _perturbed(report, delta=Fraction(1, 1000)):
    coef = report.witness.coefficients.copy()
    coef[(0,) * coef.ndim] += delta
    return replace(report, witness=SignedMeasureTensor(coef))


def run_suite(inject_fault: str | None = None) -> SuiteReport:
    """Run every check.  ``inject_fault`` corrupts the named fixture (test mode)."""
    if inject_fault is not None and inject_fault not in FAULTS:
        raise ValueError(f"unknown fault {inject_fault!r}; expected one of {FAULTS}")
    checks = []

    def add(name, anchor, passed, detail=""):
        checks.append(Check(name, anchor, bool(passed), detail))

    # two-component example
    ex1 = constructions.fixture("example1")
    rep1 = properties.decide_product_properties(list(ex1.kernel.components))
    add("example1 components characteristic", "Ex1",
        all(c[properties.CHARACTERISTIC].status == properties.HOLDS for c in rep1.components))
    add("example1 components not universal", "Ex1",
        all(c[properties.UNIVERSAL].status == properties.FAILS for c in rep1.components))
    tc = rep1.product[properties.TENSOR_CHAR]
    expected = product_measure([SignedMeasureTensor([1, -1]), SignedMeasureTensor([1, 1])])
    add("example1 tensor-char fails", "Ex1",
        tc.status == properties.FAILS and tc.witness is not None and tc.witness.witness == expected,
        f"witness {_fmt(tc.witness.witness.flat()) if tc.witness else None}")
    res1 = verify_witness(ex1.kernel, ex1.report)
    add("example1 quad form", "Ex1", res1.residuals["quad_form"] == 0, f"quad form {res1.residuals['quad_form']}")
    add("example1 mass", "Ex1", ex1.report.witness.mass() == 0, f"mass {ex1.report.witness.mass()}")
    ic = rep1.product[properties.I_CHAR]
    add("example1 I-char holds", "Thm2i", ic.status == properties.HOLDS and ic.citation == "Thm2i", ic.citation)
    bad = [(a, b) for a, b in factorizing_grid() if not i_class_element(constructions.factorizing_family(a, b)).is_zero()]
    add("factorizing family", "Tab2", not bad, f"{len(factorizing_grid())} grid points, {len(bad)} failures")

    # three-bit examples
    k3 = constructions.three_bit_kernel()
    rep2 = properties.decide_product_properties(list(k3.components))
    add("example2 I-char undecided by rules", "Ex2", rep2.product[properties.I_CHAR].status == properties.UNDECIDED)
    for name in ("example2-w1", "example2-w2"):
        fx = constructions.fixture(name)
        report = _perturbed(fx.report) if inject_fault == name else fx.report
        A = report.witness
        res = verify_witness(k3, report)
        add(f"{name} quad form", "Ex2", res.residuals["quad_form"] == 0, f"quad form {res.residuals['quad_form']}")
        add(f"{name} mass", "Ex2", A.mass() == 0, f"mass {A.mass()}")
        add(f"{name} nonzero", "Ex2", not A.is_zero(), f"max entry {report_index(A.max_abs_entry()) if not A.is_zero() else None}")
        table = constructions.THREE_BIT_DIFFERENCES[name]
        add(f"{name} difference table", "Ex2", A.flat() == table, _fmt(A.flat()))
        P, gen = constructions.parity_family(constructions.THREE_BIT_PARAMETERS[name])
        same = P.flat() == constructions.THREE_BIT_JOINTS[name] and gen.witness.flat() == table
        add(f"{name} parity family", "AppA", same, _fmt(P.flat()))

    # three-component example with two universal components
    ex3 = constructions.fixture("example3")
    A3 = ex3.report.witness.coefficients
    add("example3 row equality", "Ex3", bool(np.all(A3[0] == A3[1])) and ex3.report.witness.mass() == 0)
    rep3 = properties.decide_product_properties(list(ex3.kernel.components))
    comp_ok = (
        rep3.components[0][properties.CHARACTERISTIC].status == properties.HOLDS
        and rep3.components[1][properties.UNIVERSAL].status == properties.HOLDS
        and rep3.components[2][properties.UNIVERSAL].status == properties.HOLDS
    )
    add("example3 component verdicts", "Ex3", comp_ok)
    add("example3 I-char undecided by rules", "Ex3", rep3.product[properties.I_CHAR].status == properties.UNDECIDED)
    rep3w = properties.decide_product_properties(list(ex3.kernel.components), [ex3.report])
    add("example3 I-char fails with stored witness", "Ex3", rep3w.product[properties.I_CHAR].status == properties.FAILS)

    # product universality against the explicit Kronecker Gram
    spot = [
        [delta_kernel(2), delta_kernel(3)],
        [signed_delta_kernel(2), delta_kernel(2)],
        [delta_kernel(2), kernels.FiniteKernel([[2, 1], [1, 2]]), delta_kernel(2)],
        [constant_kernel(2), delta_kernel(2)],
    ]
    for i, comps in enumerate(spot, start=1):
        kron = kernels.validate_psd(ProductKernelSpec(comps).kronecker_gram()).status == kernels.PD
        conj = all(properties.is_universal_finite(c).status == properties.HOLDS for c in comps)
        add(f"product universality spot check {i}", "Thm4", kron == conj, f"kronecker PD {kron}, components {conj}")

    # construction from a non-characteristic component
    kc = ProductKernelSpec([constant_kernel(2), delta_kernel(2)])
    _, w = constructions.collision_witness(kc, constructions.find_embedding_collision(constant_kernel(2)))
    want = [Fraction(1, 4), Fraction(-1, 4), Fraction(-1, 4), Fraction(1, 4)]
    add("collision construction", "Thm2ii", w.valid and w.witness.flat() == want, _fmt(w.witness.flat()))
    return SuiteReport(tuple(checks))
