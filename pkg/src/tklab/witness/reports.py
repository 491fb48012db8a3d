"""Witness reports and their independent exact re-verification."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .. import kernels
from ..measure import (
    MB,
    MB0,
    PROD_MB0,
    PROD_MB_MASS0,
    RATIONAL,
    ModeError,
    ShapeError,
    SignedMeasureTensor,
    i_class_element,
    marginals,
    rank1_decomposition,
    report_index,
)

#: Class tag for elements of the independence class ``P - prod(P_m)``.
I_CLASS = "I"
WITNESS_CLASSES = (MB, MB0, PROD_MB_MASS0, PROD_MB0, I_CLASS)

FIXTURE = "fixture"
CONSTRUCTION = "construction"
SEARCH = "search"
ORIGINS = (FIXTURE, CONSTRUCTION, SEARCH)

#: Above this many entries the double-sum oracle is too slow and the
#: factor-by-factor form is used for re-verification.
BRUTEFORCE_LIMIT = 256


def _max_abs(values) -> Fraction:
    return max((abs(Fraction(v)) for v in values), default=Fraction(0))


def class_residuals(F: SignedMeasureTensor, cls: str, joint: SignedMeasureTensor | None = None) -> dict:
    """Constraint values that are all exactly zero iff ``F`` lies in ``cls``.

    ``rank1_minor`` is the largest 2x2 minor through the pivot over all
    matricizations.  For class ``I`` with a known joint, ``joint_difference``
    is the largest entry of ``F - (P - prod(P_m))``; without a joint only the
    necessary zero-marginal test is available.
    """
    if F.mode != RATIONAL:
        raise ModeError("witness residuals are computed in exact arithmetic only")
    if cls not in WITNESS_CLASSES:
        raise ValueError(f"unknown witness class {cls!r}")
    res: dict = {}
    if cls == MB:
        return res
    if cls in (MB0, PROD_MB_MASS0):
        res["mass"] = F.mass()
    if cls in (PROD_MB_MASS0, PROD_MB0):
        dec = rank1_decomposition(F)
        res["rank1_minor"] = Fraction(dec.max_minor)
        if cls == PROD_MB0:
            if dec.is_rank1:
                res["factor_sum_max"] = _max_abs(sum(f, Fraction(0)) for f in dec.factors)
            else:
                res["factor_sum_max"] = None
    if cls == I_CLASS:
        res["marginal_max"] = _max_abs(v for g in marginals(F) for v in g.flat())
        if joint is not None:
            if joint.sizes != F.sizes:
                raise ShapeError("joint and witness shapes differ")
            diff = F - i_class_element(joint)
            res["joint_difference"] = _max_abs(diff.flat())
            res["joint_min_entry"] = min(Fraction(v) for v in joint.flat())
            res["joint_mass_defect"] = joint.mass() - 1
    return res


def residuals_vanish(residuals: dict) -> bool:
    for key, val in residuals.items():
        if key == "joint_min_entry":
            if val < 0:
                return False
        elif key == "quad_form":
            continue
        elif val is None or val != 0:
            return False
    return True


@dataclass(frozen=True)
class WitnessReport:
    """A candidate measure with vanishing embedding, plus its evidence.

    ``max_entry`` is the 0-based index of a largest non-zero entry, which
    certifies ``witness != 0``.  ``joint`` is the distribution ``P`` for
    class ``I`` witnesses.
    """

    witness: SignedMeasureTensor
    cls: str
    quad_form_value: object
    nonzero: bool
    max_entry: tuple | None
    residuals: dict
    origin: str
    joint: SignedMeasureTensor | None = None
    citation: str | None = None
    note: str | None = None

    @property
    def valid(self) -> bool:
        return self.nonzero and self.quad_form_value == 0 and residuals_vanish(self.residuals)

    def to_json(self) -> dict:
        out = self.witness.to_json()
        out["quad_form"] = str(self.quad_form_value)
        out["class"] = self.cls
        out["origin"] = self.origin
        out["residuals"] = {k: _res_json(v) for k, v in sorted(self.residuals.items())}
        out["nonzero"] = self.nonzero
        out["max_entry"] = report_index(self.max_entry) if self.max_entry is not None else None
        if self.joint is not None:
            out["joint"] = self.joint.to_json()
        if self.citation is not None:
            out["citation"] = self.citation
        if self.note is not None:
            out["note"] = self.note
        return out

    @classmethod
    def from_json(cls, data: dict) -> "WitnessReport":
        F = SignedMeasureTensor.from_json(data)
        joint = SignedMeasureTensor.from_json(data["joint"]) if "joint" in data else None
        idx = data.get("max_entry")
        return cls(
            witness=F,
            cls=data["class"],
            quad_form_value=Fraction(data["quad_form"]),
            nonzero=bool(data.get("nonzero", not F.is_zero())),
            max_entry=tuple(i - 1 for i in idx) if idx else None,
            residuals={k: (None if v is None else Fraction(v)) for k, v in data.get("residuals", {}).items()},
            origin=data.get("origin", FIXTURE),
            joint=joint,
            citation=data.get("citation"),
            note=data.get("note"),
        )


def _res_json(value):
    return None if value is None else str(value)


def build_report(k, F: SignedMeasureTensor, cls: str, origin: str, joint=None, citation=None, note=None) -> WitnessReport:
    """Compute the quadratic form, non-zeroness and class residuals of ``F``."""
    if origin not in ORIGINS:
        raise ValueError(f"unknown origin {origin!r}")
    q = kernels.quad_form(k, F)
    nonzero = not F.is_zero()
    idx = F.max_abs_entry() if nonzero else None
    res = class_residuals(F, cls, joint)
    if not nonzero and note is None:
        note = "degenerate witness: the measure is zero"
    return WitnessReport(F, cls, q, nonzero, idx, res, origin, joint, citation, note)


@dataclass(frozen=True)
class VerificationResult:
    ok: bool
    residuals: dict = field(default_factory=dict)
    reasons: tuple = ()

    def __bool__(self):
        return self.ok


def verify_witness(k, report: WitnessReport) -> VerificationResult:
    """Re-check a witness from scratch in exact arithmetic.

    The quadratic form is recomputed as an explicit double sum over index
    pairs (for small spaces), so it does not share code with the
    factor-by-factor evaluation used to build reports.  The stored values in
    ``report`` are ignored except for the claimed class and joint.
    """
    k = kernels.as_product(k)
    F = report.witness
    if tuple(F.sizes) != k.sizes:
        raise ShapeError(f"witness shape {F.sizes} does not match kernel shape {k.sizes}")
    if F.mode != RATIONAL:
        raise ModeError("witnesses are verified in exact arithmetic only")
    if F.coefficients.size <= BRUTEFORCE_LIMIT:
        q = kernels.quad_form_bruteforce(k, F)
    else:
        q = kernels.quad_form(k, F)
    residuals = {"quad_form": q}
    residuals.update(class_residuals(F, report.cls, report.joint))
    reasons = []
    if F.is_zero():
        reasons.append("witness is the zero measure")
    if q != 0:
        reasons.append(f"quadratic form is {q}, not 0")
    if not residuals_vanish(residuals):
        bad = sorted(
            key for key, v in residuals.items()
            if key != "quad_form" and (v is None or (v < 0 if key == "joint_min_entry" else v != 0))
        )
        reasons.append("class constraints violated: " + ", ".join(bad))
    return VerificationResult(not reasons, residuals, tuple(reasons))
