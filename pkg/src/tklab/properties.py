"""Decisions, with certificates, for injectivity properties of product kernels.

A product kernel ``k_1 (x) ... (x) k_M`` on a finite space is checked against
five measure classes.  Its embedding must be injective on:

* ``universal``: all signed measures (strictly positive definite Gram);
* ``characteristic``: zero-mass signed measures;
* ``tensor-char``: zero-mass product measures ``F_1 (x) ... (x) F_M``;
* ``tensor0-char``: products of zero-mass factors;
* ``I-char``: differences ``P - prod(P_m)`` of a joint and its marginals.

Verdicts are three-valued.  Every ``Fails`` carries an exact witness of the
right class with zero quadratic form.  Every ``Holds`` carries pivots or a
citation tag.  On a finite space universality coincides with strict
positive definiteness of the Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .kernels import ContinuousKernel, FiniteKernel, ProductKernelSpec
from .measure import (
    MB,
    MB0,
    PROD_MB0,
    PROD_MB_MASS0,
    RATIONAL,
    ModeError,
    ShapeError,
    SignedMeasureTensor,
    i_class_element,
    outer,
)
from .witness import constructions
from .witness.reports import CONSTRUCTION, I_CLASS, SEARCH, WitnessReport, build_report, verify_witness

HOLDS = "Holds"
FAILS = "Fails"
UNDECIDED = "Undecided"
STATUSES = (HOLDS, FAILS, UNDECIDED)

EXACT = "exact-linear-algebra"
THEOREM = "theorem-inference"
SEARCHED = "search"

UNIVERSAL = "universal"
CHARACTERISTIC = "characteristic"
TENSOR_CHAR = "tensor-char"
TENSOR0_CHAR = "tensor0-char"
I_CHAR = "I-char"
PRODUCT_PROPERTIES = (UNIVERSAL, CHARACTERISTIC, TENSOR_CHAR, TENSOR0_CHAR, I_CHAR)
COMPONENT_PROPERTIES = (CHARACTERISTIC, UNIVERSAL)

#: Measure class on which each property asks for injectivity.
PROPERTY_CLASS = {
    UNIVERSAL: MB,
    CHARACTERISTIC: MB0,
    TENSOR_CHAR: PROD_MB_MASS0,
    TENSOR0_CHAR: PROD_MB0,
    I_CHAR: I_CLASS,
}
CLASS_PROPERTY = {v: k for k, v in PROPERTY_CLASS.items()}
#: Each class together with every class containing it.
CLASS_SUPERSETS = {
    MB: {MB},
    MB0: {MB0, MB},
    PROD_MB_MASS0: {PROD_MB_MASS0, MB0, MB},
    PROD_MB0: {PROD_MB0, PROD_MB_MASS0, MB0, MB},
    I_CLASS: {I_CLASS, MB0, MB},
}


class InconsistentFactsError(ValueError):
    """Two facts contradict the implication rules."""

    def __init__(self, message: str, clash: tuple):
        super().__init__(message)
        self.clash = clash


@dataclass(frozen=True)
class PropertyVerdict:
    property: str
    status: str
    provenance: str
    citation: str
    certificate: object = None
    witness: WitnessReport | None = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    def to_json(self) -> dict:
        out = {
            "status": self.status,
            "certificate": _certificate_json(self.certificate),
            "provenance": self.provenance,
            "citation": self.citation,
        }
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


def _certificate_json(cert):
    if cert is None or isinstance(cert, str):
        return cert
    return [str(v) for v in cert]


@dataclass(frozen=True)
class PropertyReport:
    """Component verdicts, product verdicts and the trace of how they were reached."""

    components: tuple
    product: dict
    trace: tuple = ()
    names: tuple = ()

    def to_json(self) -> dict:
        comps = []
        for i, c in enumerate(self.components):
            entry = {p: c[p].to_json() for p in COMPONENT_PROPERTIES}
            if self.names and self.names[i]:
                entry["name"] = self.names[i]
            comps.append(entry)
        return {
            "components": comps,
            "product": {p: self.product[p].to_json() for p in PRODUCT_PROPERTIES},
            "trace": list(self.trace),
        }

    def to_markdown(self) -> str:
        lines = ["| property | status | provenance | citation |", "|---|---|---|---|"]
        for p in PRODUCT_PROPERTIES:
            v = self.product[p]
            lines.append(f"| {p} | {v.status} | {v.provenance} | {v.citation} |")
        lines += ["", "| component | characteristic | universal |", "|---|---|---|"]
        for i, c in enumerate(self.components):
            name = self.names[i] if self.names and self.names[i] else ""
            label = f"{i + 1} {name}".strip()
            lines.append(f"| {label} | {c[CHARACTERISTIC].status} | {c[UNIVERSAL].status} |")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# single finite kernels

def is_universal_finite(k: FiniteKernel) -> PropertyVerdict:
    """Holds iff the Gram matrix is strictly positive definite.

    A failure carries a null vector ``v``, i.e. a non-zero measure with zero
    embedding.
    """
    cert = k.psd
    if cert.status == kernels.PD:
        return PropertyVerdict(UNIVERSAL, HOLDS, EXACT, "PD-Gram", tuple(cert.pivots))
    v = tuple(cert.null_vectors[0])
    witness = None
    if k.mode == RATIONAL:
        witness = build_report(k, SignedMeasureTensor(list(v)), MB, CONSTRUCTION, citation="PD-Gram")
    return PropertyVerdict(UNIVERSAL, FAILS, EXACT, "PD-Gram", v, witness)


def is_characteristic_finite(k: FiniteKernel) -> PropertyVerdict:
    """Holds iff ``B^T G B`` is strictly positive definite for the zero-sum
    basis ``B = [e_i - e_n]``; otherwise returns a zero-sum null vector."""
    if k.mode != RATIONAL:
        raise ModeError("exact decisions need rational Gram matrices")
    cert, v = kernels.characteristic_certificate(k)
    if v is None:
        tag = "Vacuous" if k.size == 1 else "ZeroSumPD"
        return PropertyVerdict(CHARACTERISTIC, HOLDS, EXACT, tag, tuple(cert.pivots))
    witness = build_report(k, SignedMeasureTensor(list(v)), MB0, CONSTRUCTION, citation="ZeroSumPD")
    return PropertyVerdict(CHARACTERISTIC, FAILS, EXACT, "ZeroSumPD", tuple(v), witness)


# ---------------------------------------------------------------------------
# implication closure

# (premise property, premise status, conclusion property, conclusion status, tag, needs the product equivalence)
_RULES = (
    (UNIVERSAL, HOLDS, CHARACTERISTIC, HOLDS, "ClassInclusion", False),
    (CHARACTERISTIC, HOLDS, TENSOR_CHAR, HOLDS, "ClassInclusion", False),
    (TENSOR_CHAR, HOLDS, TENSOR0_CHAR, HOLDS, "ClassInclusion", False),
    (CHARACTERISTIC, HOLDS, I_CHAR, HOLDS, "ClassInclusion", False),
    (TENSOR_CHAR, HOLDS, UNIVERSAL, HOLDS, "Rem4", True),
    (CHARACTERISTIC, FAILS, UNIVERSAL, FAILS, "ClassInclusion", False),
    (TENSOR_CHAR, FAILS, CHARACTERISTIC, FAILS, "ClassInclusion", False),
    (TENSOR0_CHAR, FAILS, TENSOR_CHAR, FAILS, "ClassInclusion", False),
    (I_CHAR, FAILS, CHARACTERISTIC, FAILS, "ClassInclusion", False),
    (UNIVERSAL, FAILS, TENSOR_CHAR, FAILS, "Rem4", True),
)


@dataclass(frozen=True)
class ClosureResult:
    facts: dict
    trace: tuple = field(default_factory=tuple)


def _as_verdict(prop: str, fact) -> PropertyVerdict:
    if isinstance(fact, PropertyVerdict):
        return fact
    return PropertyVerdict(prop, fact, THEOREM, "given")


def apply_implication_closure(facts: Mapping, product_equivalence: bool = True) -> ClosureResult:
    """Close a partial set of verdicts under the implication rules.

    ``facts`` maps property names to verdicts (or bare status strings).
    ``product_equivalence`` enables the rule that tensor-char and universality
    coincide, valid for product kernels with at least two non-trivial
    components.  Derived failures reuse the premise witness when its class is
    contained in the conclusion's class.  Raises
    :class:`InconsistentFactsError` naming the clashing facts.
    """
    state = {p: PropertyVerdict(p, UNDECIDED, THEOREM, "open") for p in PRODUCT_PROPERTIES}
    for p, f in facts.items():
        if p not in PRODUCT_PROPERTIES:
            raise ValueError(f"unknown property {p!r}")
        state[p] = _as_verdict(p, f)
    trace = []
    changed = True
    while changed:
        changed = False
        for src, s_status, dst, d_status, tag, needs_product in _RULES:
            if needs_product and not product_equivalence:
                continue
            if state[src].status != s_status:
                continue
            cur = state[dst]
            if cur.status == d_status:
                continue
            if cur.status != UNDECIDED:
                raise InconsistentFactsError(
                    f"{src}={s_status} implies {dst}={d_status} ({tag}), but {dst}={cur.status}",
                    ((src, s_status), (dst, cur.status)),
                )
            witness = None
            cert = tag
            if d_status == FAILS:
                w = state[src].witness
                if w is not None and PROPERTY_CLASS[dst] in CLASS_SUPERSETS[w.cls]:
                    witness = w
                    cert = tuple(w.witness.flat())
            state[dst] = PropertyVerdict(dst, d_status, THEOREM, tag, cert, witness)
            trace.append(f"{src}={s_status} => {dst}={d_status} [{tag}]")
            changed = True
    return ClosureResult(state, tuple(trace))


# ---------------------------------------------------------------------------
# finite product kernels

def _unit(n: int, i: int = 0) -> list:
    return [Fraction(int(j == i)) for j in range(n)]


def _step(n: int) -> list:
    v = [Fraction(0)] * n
    v[0], v[1] = Fraction(1), Fraction(-1)
    return v


def _product_witness(k, vectors: list, cls: str, citation: str) -> WitnessReport:
    F = SignedMeasureTensor(outer([np.array(v, dtype=object) for v in vectors]))
    return build_report(k, F, cls, CONSTRUCTION, citation=citation)


def _fails(prop: str, citation: str, witness: WitnessReport) -> PropertyVerdict:
    return PropertyVerdict(prop, FAILS, THEOREM, citation, tuple(witness.witness.flat()), witness)


def _holds(prop: str, citation: str) -> PropertyVerdict:
    return PropertyVerdict(prop, HOLDS, THEOREM, citation, citation)


def _components(components) -> list:
    if isinstance(components, ProductKernelSpec):
        components = components.components
    comps = list(components)
    if not comps:
        raise ValueError("at least one component is required")
    for c in comps:
        if not isinstance(c, FiniteKernel):
            raise TypeError("finite decisions need FiniteKernel components")
        if c.mode != RATIONAL:
            raise ModeError("exact decisions need rational Gram matrices")
    return comps


def decide_product_properties(components, witnesses: Sequence[WitnessReport] = ()) -> PropertyReport:
    """Decide the five properties of ``k_1 (x) ... (x) k_M`` on a finite space.

    Components of size one with a positive Gram only rescale the product and
    are ignored; a zero one-point Gram makes the whole product kernel zero.
    Call the remaining components active.  With at least two active
    components the product is characteristic and tensor-char exactly when it
    is universal, and universal exactly when every component is.
    ``I-char`` holds when the product is universal or when exactly two
    components are active and both are characteristic.  It fails, with the
    collision construction, when an active component is not characteristic.
    Otherwise it is left ``Undecided``.

    Verified ``witnesses`` (for instance a stored fixture or a search result)
    turn the corresponding property into ``Fails``.
    """
    comps = _components(components)
    k = ProductKernelSpec(comps)
    sizes = k.sizes
    M = len(comps)
    comp_verdicts = tuple(
        {CHARACTERISTIC: is_characteristic_finite(c), UNIVERSAL: is_universal_finite(c)} for c in comps
    )
    active = [m for m in range(M) if sizes[m] >= 2]
    zero_point = [m for m in range(M) if sizes[m] == 1 and comps[m].gram[0, 0] == 0]
    char_ok = [v[CHARACTERISTIC].status == HOLDS for v in comp_verdicts]
    univ_ok = [v[UNIVERSAL].status == HOLDS for v in comp_verdicts]
    base = [_unit(s) for s in sizes]
    trace = []
    product = {}

    def with_axes(**vecs) -> list:
        out = list(base)
        for m, v in vecs.items():
            out[int(m[1:])] = v
        return out

    # universal: the Kronecker Gram is PD iff every factor is
    if all(univ_ok):
        product[UNIVERSAL] = _holds(UNIVERSAL, "Thm4")
        trace.append("universal=Holds [Thm4]: every component Gram is strictly positive definite")
    else:
        m = univ_ok.index(False)
        v = list(comp_verdicts[m][UNIVERSAL].certificate)
        w = _product_witness(k, with_axes(**{f"a{m}": v}), MB, "Thm4")
        product[UNIVERSAL] = _fails(UNIVERSAL, "Thm4", w)
        trace.append(f"universal=Fails [Thm4]: component {m + 1} is not universal")

    # characteristic and tensor-char share witnesses (rank one, zero mass)
    if not active:
        for p in (CHARACTERISTIC, TENSOR_CHAR):
            product[p] = _holds(p, "Vacuous")
        trace.append("characteristic, tensor-char Hold [Vacuous]: single-point space")
    elif zero_point:
        j = active[0]
        vecs = with_axes(**{f"a{j}": _step(sizes[j])})
        product[CHARACTERISTIC] = _fails(CHARACTERISTIC, "ZeroKernel", _product_witness(k, vecs, MB0, "ZeroKernel"))
        product[TENSOR_CHAR] = _fails(TENSOR_CHAR, "ZeroKernel", _product_witness(k, vecs, PROD_MB_MASS0, "ZeroKernel"))
        trace.append(f"characteristic, tensor-char Fail [ZeroKernel]: component {zero_point[0] + 1} has Gram [[0]]")
    elif len(active) == 1:
        j = active[0]
        if char_ok[j]:
            for p in (CHARACTERISTIC, TENSOR_CHAR):
                product[p] = _holds(p, "Rem1iii")
            trace.append(f"characteristic, tensor-char Hold [Rem1iii]: only component {j + 1} is non-trivial and it is characteristic")
        else:
            vecs = with_axes(**{f"a{j}": list(comp_verdicts[j][CHARACTERISTIC].certificate)})
            product[CHARACTERISTIC] = _fails(CHARACTERISTIC, "Rem1iii", _product_witness(k, vecs, MB0, "Rem1iii"))
            product[TENSOR_CHAR] = _fails(TENSOR_CHAR, "Rem1iii", _product_witness(k, vecs, PROD_MB_MASS0, "Rem1iii"))
            trace.append(f"characteristic, tensor-char Fail [Rem1iii]: component {j + 1} is not characteristic")
    elif all(univ_ok):
        for p in (CHARACTERISTIC, TENSOR_CHAR):
            product[p] = _holds(p, "Rem4")
        trace.append("characteristic, tensor-char Hold [Rem4]: product is universal")
    else:
        # zero-sum step on the first active axis, a null vector on another
        j = active[0]
        m = next((a for a in range(M) if a != j and not univ_ok[a]), None)
        if m is None:
            m = j
            j = next(a for a in active if a != m)
        v = list(comp_verdicts[m][UNIVERSAL].certificate)
        vecs = with_axes(**{f"a{m}": v, f"a{j}": _step(sizes[j])})
        product[CHARACTERISTIC] = _fails(CHARACTERISTIC, "Rem4", _product_witness(k, vecs, MB0, "Rem4"))
        product[TENSOR_CHAR] = _fails(TENSOR_CHAR, "Rem4", _product_witness(k, vecs, PROD_MB_MASS0, "Rem4"))
        trace.append(f"characteristic, tensor-char Fail [Rem4]: component {m + 1} is not universal")

    # tensor0-char: products of zero-mass factors
    if len(active) < M:
        product[TENSOR0_CHAR] = _holds(TENSOR0_CHAR, "Vacuous")
        trace.append("tensor0-char=Holds [Vacuous]: a one-point component admits no non-zero zero-mass factor")
    elif all(char_ok):
        product[TENSOR0_CHAR] = _holds(TENSOR0_CHAR, "Rem1iii")
        trace.append("tensor0-char=Holds [Rem1iii]: every component is characteristic")
    else:
        m = char_ok.index(False)
        vecs = [list(comp_verdicts[m][CHARACTERISTIC].certificate) if i == m else _step(sizes[i]) for i in range(M)]
        product[TENSOR0_CHAR] = _fails(TENSOR0_CHAR, "Rem1iii", _product_witness(k, vecs, PROD_MB0, "Rem1iii"))
        trace.append(f"tensor0-char=Fails [Rem1iii]: component {m + 1} is not characteristic")

    # I-char
    non_char_active = [m for m in active if not char_ok[m]]
    if len(active) < 2:
        product[I_CHAR] = _holds(I_CHAR, "Vacuous")
        trace.append("I-char=Holds [Vacuous]: every joint with at most one non-trivial component factorizes")
    elif zero_point:
        a, b = active[0], active[1]
        P = np.zeros(sizes, dtype=object)
        P[...] = Fraction(0)
        for i in (0, 1):
            idx = [0] * M
            idx[a] = idx[b] = i
            P[tuple(idx)] = Fraction(1, 2)
        joint = SignedMeasureTensor(P)
        A = i_class_element(joint)
        w = build_report(k, A, I_CLASS, CONSTRUCTION, joint=joint, citation="ZeroKernel")
        product[I_CHAR] = _fails(I_CHAR, "ZeroKernel", w)
        trace.append("I-char=Fails [ZeroKernel]: the product kernel is zero")
    elif all(univ_ok):
        product[I_CHAR] = _holds(I_CHAR, "Thm4")
        trace.append("I-char=Holds [Thm4]: product is universal")
    elif non_char_active:
        m = non_char_active[0]
        j = next(a for a in active if a != m)
        collision = constructions.find_embedding_collision(comps[m])
        _, w = constructions.collision_witness(k, collision, collision_axis=m, point_axis=j)
        product[I_CHAR] = _fails(I_CHAR, "Thm2ii", w)
        trace.append(f"I-char=Fails [Thm2ii]: component {m + 1} is not characteristic")
    elif len(active) == 2:
        product[I_CHAR] = _holds(I_CHAR, "Thm2i")
        trace.append("I-char=Holds [Thm2i]: two characteristic components")
    else:
        product[I_CHAR] = PropertyVerdict(I_CHAR, UNDECIDED, THEOREM, "open", None)
        trace.append("I-char=Undecided: three or more characteristic components, not all universal; search needed")

    for report in witnesses:
        if tuple(report.witness.sizes) != sizes:
            raise ShapeError(f"witness shape {report.witness.sizes} does not match kernel shape {sizes}")
        check = verify_witness(k, report)
        if not check.ok:
            raise ValueError("supplied witness does not verify: " + "; ".join(check.reasons))
        prop = CLASS_PROPERTY[report.cls]
        cur = product[prop]
        if cur.status == HOLDS:
            raise InconsistentFactsError(
                f"verified witness contradicts {prop}=Holds ({cur.citation})", ((prop, HOLDS), (prop, FAILS))
            )
        if cur.status == UNDECIDED:
            prov = SEARCHED if report.origin == SEARCH else EXACT
            product[prop] = PropertyVerdict(
                prop, FAILS, prov, report.citation or "witness", tuple(report.witness.flat()), report
            )
            trace.append(f"{prop}=Fails [{report.citation or 'witness'}]: supplied witness verified exactly")

    closure = apply_implication_closure(product, product_equivalence=len(active) >= 2)
    trace.extend(closure.trace)
    names = tuple(c.name for c in comps)
    return PropertyReport(comp_verdicts, closure.facts, tuple(trace), names)


# ---------------------------------------------------------------------------
# translation-invariant kernels on R^d

def classify_translation_invariant(components: Sequence[ContinuousKernel]) -> PropertyReport:
    """Catalog-based verdicts for products of shift-invariant kernels.

    A component is characteristic (and, for the catalogued families, universal)
    iff its spectral measure has full support.  If every component qualifies,
    all five product properties hold.  Otherwise every product property
    fails, except ``I-char`` for a single component, which holds vacuously.
    """
    comps = list(components)
    if not comps:
        raise ValueError("at least one component is required")
    full = []
    for i, c in enumerate(comps):
        if not isinstance(c, ContinuousKernel) or c.meta is None:
            raise ValueError(f"component {i + 1} has no declared spectral-support metadata")
        full.append(c.meta.spectral_support_full)
    comp_verdicts = []
    for ok in full:
        status = HOLDS if ok else FAILS
        cert = "spectral support is full" if ok else "spectral support is not full"
        comp_verdicts.append({
            CHARACTERISTIC: PropertyVerdict(CHARACTERISTIC, status, THEOREM, "Thm3", cert),
            UNIVERSAL: PropertyVerdict(UNIVERSAL, status, THEOREM, "Thm3", cert),
        })
    trace = []
    if all(full):
        product = {p: _holds(p, "Thm3") for p in PRODUCT_PROPERTIES}
        trace.append("all properties Hold [Thm3]: every spectral measure has full support")
    else:
        bad = full.index(False)
        product = {p: PropertyVerdict(p, FAILS, THEOREM, "Thm3", "Thm3") for p in PRODUCT_PROPERTIES}
        if len(comps) >= 2:
            product[I_CHAR] = PropertyVerdict(I_CHAR, FAILS, THEOREM, "Thm2ii", "Thm2ii")
        else:
            product[I_CHAR] = _holds(I_CHAR, "Vacuous")
        trace.append(f"product properties Fail [Thm3]: component {bad + 1} lacks full spectral support")
    return PropertyReport(tuple(comp_verdicts), product, tuple(trace), tuple(c.family for c in comps))


def check_kernel(k) -> PropertyReport:
    """Dispatch on the kernel kind: exact finite decision or catalog lookup."""
    k = kernels.as_product(k)
    if k.all_finite:
        return decide_product_properties(list(k.components))
    if all(isinstance(c, ContinuousKernel) for c in k.components):
        return classify_translation_invariant(list(k.components))
    raise TypeError("mixed finite and continuous components are not supported")


__all__ = [
    "CHARACTERISTIC",
    "EXACT",
    "FAILS",
    "HOLDS",
    "I_CHAR",
    "PRODUCT_PROPERTIES",
    "SEARCHED",
    "TENSOR0_CHAR",
    "TENSOR_CHAR",
    "THEOREM",
    "UNDECIDED",
    "UNIVERSAL",
    "ClosureResult",
    "InconsistentFactsError",
    "PropertyReport",
    "PropertyVerdict",
    "apply_implication_closure",
    "check_kernel",
    "classify_translation_invariant",
    "decide_product_properties",
    "is_characteristic_finite",
    "is_universal_finite",
]
