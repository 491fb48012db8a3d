"""Exact witness fixtures and constructions on small finite spaces."""

from __future__ import annotations

from collections import namedtuple
from fractions import Fraction
from typing import Sequence

import numpy as np

from .. import kernels
from ..kernels import FiniteKernel, ProductKernelSpec, delta_kernel, signed_delta_kernel
from ..measure import (
    PROD_MB_MASS0,
    RATIONAL,
    JointDistribution,
    ModeError,
    SignedMeasureTensor,
    i_class_element,
    marginals,
    outer,
    parse_scalar,
    product_measure,
)
from .reports import CONSTRUCTION, FIXTURE, I_CLASS, WitnessReport, build_report

F_ = Fraction

Fixture = namedtuple("Fixture", ["name", "kernel", "report", "joints"])

#: Joint tables of the two three-bit witnesses, flattened with the first index slowest.
THREE_BIT_JOINTS = {
    "example2-w1": [F_(1, 5), F_(1, 10), F_(1, 10), F_(1, 10), F_(1, 5), F_(1, 10), F_(1, 10), F_(1, 10)],
    "example2-w2": [F_(0), F_(1, 10), F_(1, 10), F_(1, 10), F_(1, 10), F_(1, 10), F_(3, 10), F_(1, 5)],
}
#: The matching ``P - prod(P_m)`` tables, stored independently of the joints.
THREE_BIT_DIFFERENCES = {
    "example2-w1": [F_(s, 50) for s in (1, -1, -1, 1, 1, -1, -1, 1)],
    "example2-w2": [F_(s, 200) for s in (-9, 11, -1, -1, -1, -1, 11, -9)],
}
#: Parameter vectors of the parity family that reproduce the two joints.
THREE_BIT_PARAMETERS = {
    "example2-w1": [F_(1, 10)] * 6,
    "example2-w2": [F_(3, 10), F_(1, 10), F_(1, 10), F_(1, 10), F_(1, 10), F_(2, 10)],
}
FIXTURE_NAMES = ("example1", "example2-w1", "example2-w2", "example3")


class ConstraintViolation(ValueError):
    """A generated distribution violates the named constraint."""

    def __init__(self, constraint: str, detail: str = ""):
        super().__init__(f"constraint violated: {constraint}" + (f" ({detail})" if detail else ""))
        self.constraint = constraint


class CollisionError(ValueError):
    """The two distributions do not have equal embeddings."""


def three_bit_kernel() -> ProductKernelSpec:
    return ProductKernelSpec([signed_delta_kernel(2)] * 3)


def fixture(name: str) -> Fixture:
    """Exact kernels and witnesses of the four reference counterexamples."""
    if name == "example1":
        k = ProductKernelSpec([signed_delta_kernel(2), signed_delta_kernel(2)])
        F = product_measure([SignedMeasureTensor([1, -1]), SignedMeasureTensor([1, 1])])
        return Fixture(name, k, build_report(k, F, PROD_MB_MASS0, FIXTURE, citation="Ex1"), ())
    if name in THREE_BIT_JOINTS:
        k = three_bit_kernel()
        P = JointDistribution.from_flat((2, 2, 2), THREE_BIT_JOINTS[name])
        A = i_class_element(P)
        return Fixture(name, k, build_report(k, A, I_CLASS, FIXTURE, joint=P, citation="Ex2"), (P,))
    if name == "example3":
        k = ProductKernelSpec([signed_delta_kernel(2), delta_kernel(2), delta_kernel(2)])
        P = JointDistribution.from_flat((2, 2, 2), THREE_BIT_JOINTS["example2-w1"])
        A = i_class_element(P)
        return Fixture(name, k, build_report(k, A, I_CLASS, FIXTURE, joint=P, citation="Ex3"), (P,))
    raise KeyError(f"unknown fixture {name!r}; expected one of {FIXTURE_NAMES}")


def _rational(value, what: str) -> Fraction:
    try:
        return parse_scalar(value, RATIONAL)
    except (ModeError, TypeError) as exc:
        raise ModeError(f"{what} must be an exact rational: {exc}") from None


# ---------------------------------------------------------------------------
# two-by-two family of product distributions

def factorizing_family(a, b) -> JointDistribution:
    """Two-by-two joint ``[[a c / s, b c / s], [a, b]]`` with ``s = a + b``, ``c = 1 - s``.

    Every member is the product of its marginals ``(c, s)`` and ``(a, b) / s``.
    """
    a = _rational(a, "a")
    b = _rational(b, "b")
    if not (0 <= a <= 1 and 0 <= b <= 1):
        raise ConstraintViolation("0 <= a, b <= 1", f"a={a}, b={b}")
    s = a + b
    if s > 1:
        raise ConstraintViolation("a + b <= 1", f"a + b = {s}")
    if s == 0:
        raise ConstraintViolation("a + b > 0", "a = b = 0")
    c = 1 - s
    P = JointDistribution([[a * c / s, b * c / s], [a, b]])
    if not i_class_element(P).is_zero():
        raise AssertionError("factorizing family member does not factorize")
    return P


# ---------------------------------------------------------------------------
# six-parameter family of three-bit joints with a vanishing independence embedding

def _corner_denominator(z0, z1, z2, z3, z4, z5):
    return (2*z2*z1 - z1 - 2*z4 - z3 - z0 - 2*z5 - z2 + 2*z2*z4 + 2*z1*z4 + 2*z2*z0 + 2*z1*z3
            + 2*z2*z5 + 2*z4*z3 + 2*z1*z5 + 2*z4*z0 + 4*z4*z5 + 2*z3*z0 + 2*z3*z5 + 2*z0*z5
            + 2*z4**2 + 2*z5**2)


def _first_corner_numerator(z0, z1, z2, z3, z4, z5):
    return (z2 + z1 + z4 + z5 - 3*z2*z1 - 4*z2*z4 - 4*z1*z4 - z2*z3 - 2*z2*z0 - 2*z1*z3
            - 3*z2*z5 - 2*z4*z3 - z1*z0 - 3*z1*z5 - 2*z4*z0 - 4*z4*z5 - z3*z0 - z3*z5 - z0*z5
            + 2*z2*z1**2 + 2*z2**2*z1 + 4*z2*z4**2 + 2*z2**2*z4 + 4*z1*z4**2 + 2*z1**2*z4
            + 2*z2**2*z0 + 2*z1**2*z3 + 2*z2*z5**2 + 2*z2**2*z5 + 2*z4**2*z3 + 2*z1*z5**2
            + 2*z1**2*z5 + 2*z4**2*z0 + 2*z4*z5**2 + 4*z4**2*z5 - z2**2 - z1**2 - 3*z4**2
            + 2*z4**3 - z5**2 + 6*z2*z1*z4 + 2*z2*z1*z3 + 2*z2*z4*z3 + 2*z2*z1*z0 + 4*z2*z1*z5
            + 4*z2*z4*z0 + 4*z1*z4*z3 + 6*z2*z4*z5 + 2*z1*z4*z0 + 6*z1*z4*z5 + 2*z2*z3*z0
            + 2*z2*z3*z5 + 2*z1*z3*z0 + 2*z2*z0*z5 + 2*z1*z3*z5 + 2*z4*z3*z0 + 2*z4*z3*z5
            + 2*z1*z0*z5 + 2*z4*z0*z5)


def _second_corner_numerator(z0, z1, z2, z3, z4, z5):
    return (z4 + z3 + z0 + z5 - z2*z1 - z2*z4 - z1*z4 - z2*z3 - 2*z2*z0 - 2*z1*z3 - 2*z2*z5
            - 3*z4*z3 - z1*z0 - 2*z1*z5 - 3*z4*z0 - 4*z4*z5 - 3*z3*z0 - 4*z3*z5 - 4*z0*z5
            + 2*z2*z0**2 + 2*z1*z3**2 + 2*z2*z5**2 + 2*z4*z3**2 + 2*z4**2*z3 + 2*z1*z5**2
            + 2*z4*z0**2 + 2*z4**2*z0 + 4*z4*z5**2 + 2*z4**2*z5 + 2*z3*z0**2 + 2*z3**2*z0
            + 4*z3*z5**2 + 2*z3**2*z5 + 4*z0*z5**2 + 2*z0**2*z5 - z4**2 - z3**2 - z0**2
            - 3*z5**2 + 2*z5**3 + 2*z2*z1*z3 + 2*z2*z4*z3 + 2*z2*z1*z0 + 2*z2*z1*z5
            + 2*z2*z4*z0 + 2*z1*z4*z3 + 2*z2*z4*z5 + 2*z1*z4*z0 + 2*z1*z4*z5 + 2*z2*z3*z0
            + 2*z2*z3*z5 + 2*z1*z3*z0 + 4*z2*z0*z5 + 4*z1*z3*z5 + 4*z4*z3*z0 + 6*z4*z3*z5
            + 2*z1*z0*z5 + 6*z4*z0*z5 + 6*z3*z0*z5)


def parity_family_corners(z: Sequence) -> tuple:
    """The two solved entries ``(p[0,0,0], p[1,0,0])`` as rational functions of ``z``."""
    zs = [_rational(v, "z") for v in z]
    if len(zs) != 6:
        raise ValueError(f"expected six parameters, got {len(zs)}")
    den = _corner_denominator(*zs)
    if den == 0:
        raise ConstraintViolation("non-zero denominator", f"z={[str(v) for v in zs]}")
    return -_first_corner_numerator(*zs) / den, -_second_corner_numerator(*zs) / den


def parity_family(z: Sequence) -> tuple:
    """Three-bit joint ``P(z)`` whose independence measure has zero embedding
    under the product of three ``2 delta - 1`` kernels.

    Six entries are the parameters themselves, the remaining two solve the
    parity constraints.  The result is validated directly: entries in [0, 1],
    exact unit mass, and both parity sums of ``P - prod(P_m)`` equal to zero.
    Returns ``(P, report)``.
    """
    zs = [_rational(v, "z") for v in z]
    if len(zs) != 6:
        raise ValueError(f"expected six parameters, got {len(zs)}")
    for i, v in enumerate(zs):
        if not 0 <= v <= 1:
            raise ConstraintViolation(f"0 <= z{i} <= 1", f"z{i} = {v}")
    p000, p100 = parity_family_corners(zs)
    z0, z1, z2, z3, z4, z5 = zs
    flat = [p000, z2, z1, z4, p100, z3, z0, z5]
    for idx, v in zip(np.ndindex(2, 2, 2), flat):
        if not 0 <= v <= 1:
            raise ConstraintViolation("entries in [0, 1]", f"p{''.join(str(i + 1) for i in idx)} = {v}")
    total = sum(flat, Fraction(0))
    if total != 1:
        raise ConstraintViolation("entries sum to 1", f"sum = {total}")
    P = JointDistribution.from_flat((2, 2, 2), flat)
    A = i_class_element(P)
    even, odd = parity_sums(A)
    if even != 0:
        raise ConstraintViolation("even-parity sum of the difference is 0", f"sum = {even}")
    if odd != 0:
        raise ConstraintViolation("odd-parity sum of the difference is 0", f"sum = {odd}")
    k = three_bit_kernel()
    return P, build_report(k, A, I_CLASS, CONSTRUCTION, joint=P, citation="Ex2")


def parity_sums(A: SignedMeasureTensor) -> tuple:
    """Sums of the entries whose 0-based index sum is even, respectively odd."""
    even = odd = Fraction(0)
    for idx in np.ndindex(*A.sizes):
        if sum(idx) % 2 == 0:
            even += A.coefficients[idx]
        else:
            odd += A.coefficients[idx]
    return even, odd


# ---------------------------------------------------------------------------
# witnesses built from a non-injective component kernel

def collision_from_vector(k: FiniteKernel, v: Sequence) -> tuple:
    """Split a zero-sum null direction ``v`` into two distributions with equal embeddings.

    ``v = v_plus - v_minus``; both parts are divided by ``sum(v_plus)``.
    """
    v = [_rational(x, "v") for x in v]
    if len(v) != k.size:
        raise ValueError("vector length does not match the kernel")
    if sum(v) != 0 or all(x == 0 for x in v):
        raise ValueError("v must be a non-zero zero-sum vector")
    s = sum((x for x in v if x > 0), Fraction(0))
    P = JointDistribution([x / s if x > 0 else Fraction(0) for x in v])
    Q = JointDistribution([-x / s if x < 0 else Fraction(0) for x in v])
    if kernels.mmd2(k, P, Q) != 0:
        raise CollisionError("v is not a null direction of the kernel")
    return P, Q


def find_embedding_collision(k: FiniteKernel):
    """Two different distributions with the same embedding, or ``None`` when
    the kernel is characteristic."""
    if k.mode != RATIONAL:
        raise ModeError("collisions are computed for exact Gram matrices only")
    _, v = kernels.characteristic_certificate(k)
    if v is None:
        return None
    return collision_from_vector(k, v)


def collision_witness(
    k,
    collision: tuple,
    collision_axis: int = 0,
    point_axis: int = 1,
    points: tuple = (0, 1),
    tails: Sequence | None = None,
):
    """Joint ``F = (P (x) delta_z + P' (x) delta_z') / 2`` times fixed tails.

    ``P, P'`` live on ``collision_axis`` and must have equal embeddings under
    that component; ``z != z'`` are points of ``point_axis``.  Every other
    axis carries a fixed distribution from ``tails`` (default: the first
    point).  Returns ``(F, report)`` where the report certifies that
    ``F - prod(F_m)`` is non-zero with a vanishing embedding.
    """
    k = kernels.as_product(k)
    M = k.n_components
    if M < 2:
        raise ValueError("the construction needs at least two components")
    if collision_axis == point_axis or not (0 <= collision_axis < M and 0 <= point_axis < M):
        raise ValueError("collision_axis and point_axis must be distinct valid axes")
    z, z2 = points
    if z == z2:
        raise ValueError("the two points must differ")
    sizes = k.sizes
    if not (0 <= z < sizes[point_axis] and 0 <= z2 < sizes[point_axis]):
        raise ValueError("points out of range")
    P, Q = collision
    comp = k.components[collision_axis]
    if kernels.mmd2(comp, P, Q) != 0:
        raise CollisionError("the collision pair does not have equal embeddings")
    others = [m for m in range(M) if m not in (collision_axis, point_axis)]
    if tails is None:
        tails = [SignedMeasureTensor.dirac((sizes[m],), (0,)) for m in others]
    tails = list(tails)
    if len(tails) != len(others):
        raise ValueError(f"expected {len(others)} tail distributions, got {len(tails)}")

    def joint_for(first: SignedMeasureTensor, point: int) -> np.ndarray:
        vecs = [None] * M
        vecs[collision_axis] = first.coefficients
        vecs[point_axis] = SignedMeasureTensor.dirac((sizes[point_axis],), (point,)).coefficients
        for m, t in zip(others, tails):
            vecs[m] = t.coefficients
        return outer(vecs)

    half = Fraction(1, 2)
    F = JointDistribution((joint_for(P, z) + joint_for(Q, z2)) * half, RATIONAL)
    A = F - product_measure(marginals(F))
    note = None
    if A.is_zero():
        note = "degenerate witness: the two distributions coincide"
    return F, build_report(k, A, I_CLASS, CONSTRUCTION, joint=F, citation="Thm2ii", note=note)
