"""Finite signed measures on products of finite spaces.

A measure on ``X_1 x ... x X_M`` (with ``|X_m| = sizes[m]``) is stored as a
dense coefficient tensor.  Two scalar modes are supported:

* ``"rational"`` -- numpy object arrays of :class:`fractions.Fraction`,
  always in lowest terms.  Every verification path uses this mode.
* ``"float"`` -- ``float64`` arrays, used by numerical search and estimation.

Mixing modes in one operation raises :class:`ModeError`; there is no silent
coercion.  Flattening is row-major with the first index slowest.  Indices are
0-based in the API and 1-based in reports.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

RATIONAL = "rational"
FLOAT = "float"

#: Relative tolerance used by float-mode structural tests (rank-1, zero checks).
FLOAT_RTOL = 1e-10
#: Tolerance on the total mass of a float-mode probability distribution.
FLOAT_MASS_TOL = 1e-12


class ModeError(TypeError):
    """Rational and float scalars were combined in one operation."""


class ShapeError(ValueError):
    """Measure shapes are incompatible."""


def parse_scalar(value, mode: str | None = None):
    """Convert ``value`` to a scalar of the requested mode.

    Strings such as ``"3/10"`` and Python ints become fractions.  Floats are
    rejected in rational mode, because the conversion would not be exact in
    general.
    """
    if mode is None:
        mode = FLOAT if isinstance(value, (float, np.floating)) else RATIONAL
    if mode == RATIONAL:
        if isinstance(value, (float, np.floating)):
            raise ModeError(f"float {value!r} supplied where a rational is required")
        if isinstance(value, bool):
            raise TypeError("booleans are not scalars")
        if isinstance(value, (str, int, np.integer, Rational)):
            return Fraction(value)
        raise TypeError(f"cannot interpret {value!r} as a rational")
    if mode == FLOAT:
        if isinstance(value, str):
            return float(Fraction(value))
        return float(value)
    raise ValueError(f"unknown scalar mode {mode!r}")


def scalar_mode(value) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT
    if isinstance(value, (int, np.integer, Fraction)):
        return RATIONAL
    raise TypeError(f"not a scalar: {value!r}")


def as_array(values, mode: str | None = None) -> np.ndarray:
    """Build a coefficient array in a single scalar mode.

    With ``mode=None`` the mode is inferred: float arrays and Python floats
    give float mode, everything else (ints, fractions, ``"p/q"`` strings) gives
    rational mode.  Inputs that mix floats with exact values are rejected.
    """
    if isinstance(values, np.ndarray) and values.dtype.kind == "f":
        if mode in (None, FLOAT):
            return values.astype(float)
        raise ModeError("float array supplied where rationals are required")
    raw = np.asarray(values, dtype=object)
    flat = raw.reshape(-1)
    if mode is None:
        kinds = {FLOAT if isinstance(v, (float, np.floating)) else RATIONAL for v in flat}
        if len(kinds) > 1:
            raise ModeError("coefficients mix floats and exact values")
        mode = kinds.pop() if kinds else RATIONAL
    if mode == FLOAT:
        return np.array([parse_scalar(v, FLOAT) for v in flat], dtype=float).reshape(raw.shape)
    out = np.empty(raw.shape, dtype=object)
    out.reshape(-1)[:] = [parse_scalar(v, RATIONAL) for v in flat]
    return out


def array_mode(arr: np.ndarray) -> str:
    return FLOAT if arr.dtype.kind == "f" else RATIONAL


@dataclass(frozen=True)
class SpaceShape:
    """Sizes ``(|X_1|, ..., |X_M|)`` of a finite product space."""

    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes:
            raise ShapeError("a product space needs at least one component")
        if any(s < 1 for s in sizes):
            raise ShapeError(f"component sizes must be >= 1, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @property
    def n_components(self) -> int:
        return len(self.sizes)

    @property
    def total(self) -> int:
        return math.prod(self.sizes)


class SignedMeasureTensor:
    """Immutable coefficient tensor of a finite signed measure.

    ``F = sum_i coefficients[i] * delta_i`` over multi-indices ``i``.
    """

    __slots__ = ("_coef", "_mode")

    def __init__(self, coefficients, mode: str | None = None):
        arr = as_array(coefficients, mode)
        if arr.ndim == 0:
            raise ShapeError("a measure needs at least one component axis")
        arr = arr.copy()
        arr.setflags(write=False)
        self._coef = arr
        self._mode = array_mode(arr)

    # construction helpers -------------------------------------------------
    @classmethod
    def zeros(cls, sizes: Sequence[int], mode: str = RATIONAL) -> "SignedMeasureTensor":
        shape = SpaceShape(tuple(sizes))
        if mode == FLOAT:
            return cls(np.zeros(shape.sizes))
        arr = np.empty(shape.sizes, dtype=object)
        arr.reshape(-1)[:] = [Fraction(0)] * shape.total
        return cls(arr, RATIONAL)

    @classmethod
    def from_flat(cls, sizes: Sequence[int], flat, mode: str | None = None):
        shape = SpaceShape(tuple(sizes))
        arr = as_array(list(flat), mode)
        if arr.size != shape.total:
            raise ShapeError(f"expected {shape.total} coefficients, got {arr.size}")
        return cls(arr.reshape(shape.sizes), array_mode(arr))

    @classmethod
    def dirac(cls, sizes: Sequence[int], index: Sequence[int], mode: str = RATIONAL):
        arr = cls.zeros(sizes, mode).coefficients.copy()
        arr[tuple(index)] = Fraction(1) if mode == RATIONAL else 1.0
        return cls(arr, mode)

    # basic accessors ------------------------------------------------------
    @property
    def coefficients(self) -> np.ndarray:
        return self._coef

    @property
    def mode(self) -> str:
        return self._mode

    @property
    def shape(self) -> SpaceShape:
        return SpaceShape(self._coef.shape)

    @property
    def sizes(self) -> tuple:
        return self._coef.shape

    @property
    def n_components(self) -> int:
        return self._coef.ndim

    def flat(self) -> list:
        return list(self._coef.reshape(-1))

    def mass(self):
        return _total(self._coef)

    def is_zero(self) -> bool:
        if self._mode == RATIONAL:
            return all(v == 0 for v in self._coef.flat)
        return bool(np.all(self._coef == 0))

    def max_abs_entry(self) -> tuple:
        """0-based index of the entry with largest absolute value (first on ties)."""
        flat = [abs(v) for v in self._coef.flat]
        k = max(range(len(flat)), key=lambda i: (flat[i], -i))
        return tuple(int(i) for i in np.unravel_index(k, self.sizes))

    def to_float(self) -> "SignedMeasureTensor":
        return SignedMeasureTensor(self._coef.astype(float), FLOAT)

    # arithmetic -----------------------------------------------------------
    def _check(self, other: "SignedMeasureTensor"):
        if not isinstance(other, SignedMeasureTensor):
            return NotImplemented
        if other._mode != self._mode:
            raise ModeError(f"cannot combine {self._mode} and {other._mode} measures")
        if other.sizes != self.sizes:
            raise ShapeError(f"shape mismatch {self.sizes} vs {other.sizes}")
        return None

    def __add__(self, other):
        if (res := self._check(other)) is not None:
            return res
        return SignedMeasureTensor(self._coef + other._coef, self._mode)

    def __sub__(self, other):
        if (res := self._check(other)) is not None:
            return res
        return SignedMeasureTensor(self._coef - other._coef, self._mode)

    def __neg__(self):
        return SignedMeasureTensor(-self._coef, self._mode)

    def scale(self, alpha) -> "SignedMeasureTensor":
        if scalar_mode(alpha) != self._mode:
            raise ModeError(f"cannot scale a {self._mode} measure by {alpha!r}")
        if self._mode == RATIONAL:
            alpha = Fraction(alpha)
        return SignedMeasureTensor(self._coef * alpha, self._mode)

    def equals(self, other: "SignedMeasureTensor") -> bool:
        if other.sizes != self.sizes or other._mode != self._mode:
            return False
        return bool(np.all(self._coef == other._coef))

    def __eq__(self, other):
        if not isinstance(other, SignedMeasureTensor):
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    def __repr__(self):
        body = ", ".join(str(v) for v in self.flat())
        return f"SignedMeasureTensor(sizes={list(self.sizes)}, [{body}])"

    # serialization --------------------------------------------------------
    def to_json(self) -> dict:
        if self._mode == RATIONAL:
            coefs = [str(v) for v in self.flat()]
        else:
            coefs = [float(v) for v in self.flat()]
        return {"shape": list(self.sizes), "coefficients": coefs}

    @classmethod
    def from_json(cls, data: dict) -> "SignedMeasureTensor":
        coefs = data["coefficients"]
        mode = FLOAT if any(isinstance(c, float) for c in coefs) else RATIONAL
        return cls.from_flat(data["shape"], coefs, mode)


def _total(arr: np.ndarray):
    if arr.dtype.kind == "f":
        return float(arr.sum())
    return sum(arr.flat, Fraction(0))


class JointDistribution(SignedMeasureTensor):
    """A probability distribution on a finite product space."""

    __slots__ = ()

    def __init__(self, coefficients, mode: str | None = None):
        super().__init__(coefficients, mode)
        if any(v < 0 for v in self._coef.flat):
            raise ValueError("probability coefficients must be non-negative")
        total = self.mass()
        if self._mode == RATIONAL:
            if total != 1:
                raise ValueError(f"probabilities sum to {total}, not 1")
        elif abs(total - 1.0) > FLOAT_MASS_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")

    @classmethod
    def from_measure(cls, measure: SignedMeasureTensor) -> "JointDistribution":
        return cls(measure.coefficients, measure.mode)

    @classmethod
    def from_flat(cls, sizes, flat, mode=None):
        return cls.from_measure(SignedMeasureTensor.from_flat(sizes, flat, mode))


# ---------------------------------------------------------------------------
# operations

def marginal(F: SignedMeasureTensor, m: int) -> SignedMeasureTensor:
    """Marginal of ``F`` on component ``m`` (0-based)."""
    if not 0 <= m < F.n_components:
        raise IndexError(f"component {m} out of range for M={F.n_components}")
    others = tuple(i for i in range(F.n_components) if i != m)
    coef = F.coefficients
    if F.mode == FLOAT:
        return SignedMeasureTensor(coef.sum(axis=others) if others else coef, FLOAT)
    moved = np.moveaxis(coef, m, 0).reshape(coef.shape[m], -1)
    return SignedMeasureTensor([sum(row, Fraction(0)) for row in moved], RATIONAL)


def marginals(F: SignedMeasureTensor) -> list:
    return [marginal(F, m) for m in range(F.n_components)]


def outer(vectors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.asarray(vectors[0])
    for v in vectors[1:]:
        out = np.multiply.outer(out, np.asarray(v))
    return out


def product_measure(factors: Sequence[SignedMeasureTensor]) -> SignedMeasureTensor:
    """Tensor (outer) product of one-component measures."""
    if not factors:
        raise ValueError("product_measure needs at least one factor")
    modes = {f.mode for f in factors}
    if len(modes) > 1:
        raise ModeError("factors mix rational and float scalars")
    for f in factors:
        if f.n_components != 1:
            raise ShapeError("product_measure factors must be one-component measures")
    mode = modes.pop()
    return SignedMeasureTensor(outer([f.coefficients for f in factors]), mode)


def i_class_element(P: SignedMeasureTensor) -> SignedMeasureTensor:
    """``P`` minus the product of its marginals."""
    if P.n_components < 2:
        raise ValueError("the independence class needs M >= 2 components")
    return P - product_measure(marginals(P))


# ---------------------------------------------------------------------------
# class membership

MB = "Mb"
MB0 = "Mb0"
PROD_MB0 = "ProdMb0"
PROD_MB_MASS0 = "ProdMbMass0"
I_MARGINAL = "I-marginal-necessary"
MEASURE_CLASSES = (MB, MB0, PROD_MB0, PROD_MB_MASS0, I_MARGINAL)


@dataclass(frozen=True)
class Rank1Decomposition:
    """``F = outer(factors)`` when ``is_rank1``; ``pivot`` is the 0-based anchor entry."""

    is_rank1: bool
    factors: tuple
    pivot: tuple | None
    max_minor: object


@dataclass(frozen=True)
class Membership:
    member: bool
    residuals: dict


def _is_zero(value, scale, mode) -> bool:
    if mode == RATIONAL:
        return value == 0
    return abs(value) <= FLOAT_RTOL * max(scale, 1e-300)


def rank1_decomposition(F: SignedMeasureTensor) -> Rank1Decomposition:
    """Decide whether ``F`` is an outer product of vectors and extract the factors.

    For each mode matricization the 2x2 minors through a pivot row/column must
    vanish; this is equivalent to all 2x2 minors vanishing.  When every
    matricization has rank <= 1 the tensor is rank one and its factors are the
    fibres through the largest entry.
    """
    coef = F.coefficients
    mode = F.mode
    zero = Fraction(0) if mode == RATIONAL else 0.0
    if F.is_zero():
        factors = tuple(np.array([zero] * s, dtype=coef.dtype) for s in F.sizes)
        return Rank1Decomposition(True, factors, None, zero)
    pivot = F.max_abs_entry()
    pv = coef[pivot]
    scale = float(abs(pv)) ** 2
    worst = zero
    for m in range(F.n_components):
        mat = np.moveaxis(coef, m, 0).reshape(coef.shape[m], -1)
        r = pivot[m]
        rest = list(pivot[:m]) + list(pivot[m + 1:])
        c = int(np.ravel_multi_index(rest, [s for i, s in enumerate(F.sizes) if i != m])) if rest else 0
        # minor(i, j) = M[i,j] M[r,c] - M[i,c] M[r,j]
        minors = mat * mat[r, c] - np.multiply.outer(mat[:, c], mat[r, :])
        big = max((abs(v) for v in minors.flat), default=zero)
        if big > worst:
            worst = big
        if not _is_zero(big, scale, mode):
            return Rank1Decomposition(False, (), pivot, worst)
    fibres = []
    for m in range(F.n_components):
        idx = list(pivot)
        idx[m] = slice(None)
        fibres.append(np.array(coef[tuple(idx)]))
    # outer(fibres) = F * pv^(M-1); fold the correction into the first factor
    if F.n_components > 1:
        corr = pv ** (F.n_components - 1)
        fibres[0] = fibres[0] / corr
    return Rank1Decomposition(True, tuple(fibres), pivot, worst)


def class_membership(F: SignedMeasureTensor, cls: str) -> Membership:
    """Test membership of ``F`` in one of the measure classes.

    ``I-marginal-necessary`` only checks that every marginal vanishes, which
    is necessary but not sufficient for ``F = P - prod(P_m)``.
    """
    mode = F.mode
    mass = F.mass()
    scale = float(max((abs(v) for v in F.coefficients.flat), default=0))
    if cls == MB:
        return Membership(True, {})
    if cls == MB0:
        return Membership(_is_zero(mass, scale, mode), {"mass": mass})
    if cls in (PROD_MB0, PROD_MB_MASS0):
        dec = rank1_decomposition(F)
        res = {"mass": mass, "rank1_minor": dec.max_minor}
        if not dec.is_rank1:
            return Membership(False, res)
        sums = [_total(f) for f in dec.factors]
        res["factor_sums"] = sums
        if cls == PROD_MB_MASS0:
            return Membership(_is_zero(mass, scale, mode), res)
        if F.is_zero():
            return Membership(True, res)
        fscale = [float(max(abs(v) for v in f)) for f in dec.factors]
        ok = all(_is_zero(s, fs, mode) for s, fs in zip(sums, fscale))
        return Membership(ok, res)
    if cls == I_MARGINAL:
        margs = [marginal(F, m) for m in range(F.n_components)]
        worst = [max(abs(v) for v in g.coefficients) for g in margs]
        ok = all(_is_zero(w, scale, mode) for w in worst)
        return Membership(ok, {"mass": mass, "marginal_max_abs": worst})
    raise ValueError(f"unknown measure class {cls!r}; expected one of {MEASURE_CLASSES}")


def iter_indices(sizes: Iterable[int]):
    return itertools.product(*(range(s) for s in sizes))


def report_index(index: Sequence[int]) -> list:
    """0-based internal index to the 1-based form used in reports."""
    return [int(i) + 1 for i in index]
