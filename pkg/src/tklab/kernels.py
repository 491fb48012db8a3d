"""Kernels on finite and Euclidean spaces, and their embedding quadratic forms.

The mean embedding of a signed measure is never built as a function.  On a
finite space the squared RKHS norm of the embedding of ``F`` is
``vec(F)^T (G_1 kron ... kron G_M) vec(F)``, evaluated here one mode at a time.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import linalg
from .measure import FLOAT, RATIONAL, ModeError, ShapeError, SignedMeasureTensor, as_array, array_mode

#: Relative eigenvalue threshold for float-mode PSD checks.
FLOAT_PSD_TOL = 1e-10
FLOAT_SYM_TOL = 1e-12

PSD = linalg.PSD
PD = linalg.PD
NOT_PSD = linalg.NOT_PSD


class NotPSDError(ValueError):
    """A Gram matrix is not positive semidefinite; ``vector`` has v^T G v < 0."""

    def __init__(self, message, vector):
        super().__init__(message)
        self.vector = vector


@dataclass(frozen=True)
class PSDCertificate:
    """``status`` is PD, PSD or NotPSD.

    PD carries the LDL^T pivots, PSD a null-space basis, NotPSD a vector with
    a negative form value.  Float mode reports eigenvalues instead of pivots.
    """

    status: str
    pivots: tuple = ()
    null_vectors: tuple = ()
    negative_vector: tuple | None = None
    rank: int = 0


def validate_psd(G, tol: float = FLOAT_PSD_TOL) -> PSDCertificate:
    """Classify a symmetric matrix as PD, PSD or NotPSD with a certificate."""
    arr = as_array(G)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("Gram matrix must be square")
    if array_mode(arr) == FLOAT:
        return _validate_psd_float(arr, tol)
    res = linalg.classify_psd(arr)
    return PSDCertificate(
        res.status,
        tuple(res.pivots),
        tuple(tuple(v) for v in res.null_vectors),
        tuple(res.negative_vector) if res.negative_vector is not None else None,
        res.rank,
    )


def _validate_psd_float(G: np.ndarray, tol: float) -> PSDCertificate:
    norm = float(np.abs(G).max()) if G.size else 0.0
    if not np.allclose(G, G.T, atol=FLOAT_SYM_TOL * max(norm, 1.0), rtol=0):
        raise ValueError("matrix is not symmetric")
    w, V = np.linalg.eigh((G + G.T) / 2)
    thresh = tol * max(norm, 1e-300)
    if w.size and w[0] < -thresh:
        return PSDCertificate(NOT_PSD, tuple(w), (), tuple(V[:, 0]), int(np.sum(w > thresh)))
    null = tuple(tuple(V[:, i]) for i in range(len(w)) if abs(w[i]) <= thresh)
    status = PSD if null else PD
    return PSDCertificate(status, tuple(w), null, None, len(w) - len(null))


class FiniteKernel:
    """Kernel on ``{1, ..., n}`` given by its Gram matrix, validated PSD on construction."""

    def __init__(self, gram, name: str | None = None):
        arr = as_array(gram)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValueError("Gram matrix must be a non-empty square matrix")
        cert = validate_psd(arr)
        if cert.status == NOT_PSD:
            raise NotPSDError(
                f"Gram matrix is not positive semidefinite; certificate v = "
                f"{[str(x) for x in cert.negative_vector]}",
                cert.negative_vector,
            )
        arr = arr.copy()
        arr.setflags(write=False)
        self.gram = arr
        self.mode = array_mode(arr)
        self.psd = cert
        self.name = name

    @property
    def size(self) -> int:
        return self.gram.shape[0]

    def to_json(self) -> dict:
        if self.mode == RATIONAL:
            rows = [[str(v) for v in row] for row in self.gram]
        else:
            rows = [[float(v) for v in row] for row in self.gram]
        return {"type": "finite", "gram": rows}

    def __repr__(self):
        return f"FiniteKernel({self.name or [[str(v) for v in r] for r in self.gram]})"


def zero_sum_basis(n: int) -> list:
    """Columns ``e_i - e_n`` (i < n), as rows of an ``(n-1) x n`` list."""
    rows = []
    for i in range(n - 1):
        v = [Fraction(0)] * n
        v[i] = Fraction(1)
        v[n - 1] = Fraction(-1)
        rows.append(v)
    return rows


def restricted_zero_sum_form(G) -> list:
    """``B^T G B`` for the zero-sum basis ``B``."""
    G = linalg.to_fraction_matrix(G)
    B = zero_sum_basis(len(G))
    GB = [[sum((G[r][c] * b[c] for c in range(len(G))), Fraction(0)) for b in B] for r in range(len(G))]
    return [[sum((a[r] * GB[r][j] for r in range(len(G))), Fraction(0)) for j in range(len(B))] for a in B]


def characteristic_certificate(k: "FiniteKernel"):
    """Decide injectivity of the embedding on zero-sum measures.

    Returns ``(cert, v)`` where ``cert`` classifies ``B^T G B`` and ``v`` is a
    non-zero zero-sum vector with ``v^T G v = 0`` (``None`` when none exists).
    """
    n = k.size
    if n == 1:
        return PSDCertificate(PD), None
    cert = validate_psd(restricted_zero_sum_form(k.gram))
    if cert.status == PD:
        return cert, None
    w = cert.null_vectors[0]
    B = zero_sum_basis(n)
    v = [sum((w[j] * B[j][i] for j in range(n - 1)), Fraction(0)) for i in range(n)]
    return cert, tuple(v)


# named finite kernels ------------------------------------------------------

def signed_delta_kernel(n: int = 2) -> FiniteKernel:
    """``k(x, x') = 2 delta(x, x') - 1`` on ``n`` points."""
    return FiniteKernel([[Fraction(2 * (i == j) - 1) for j in range(n)] for i in range(n)], name="2delta-1")


def delta_kernel(n: int = 2) -> FiniteKernel:
    return FiniteKernel([[Fraction(int(i == j)) for j in range(n)] for i in range(n)], name="delta")


def constant_kernel(n: int = 2) -> FiniteKernel:
    return FiniteKernel([[Fraction(1)] * n for _ in range(n)], name="constant")


# continuous kernels --------------------------------------------------------

GAUSSIAN = "gaussian"
LAPLACIAN = "laplacian"
CONSTANT = "constant"
DISCRETE_DELTA = "discrete-delta"
CONTINUOUS_FAMILIES = (GAUSSIAN, LAPLACIAN, CONSTANT, DISCRETE_DELTA)


@dataclass(frozen=True)
class TranslationInvariantMeta:
    """Declared support property of the spectral measure of a shift-invariant kernel."""

    spectral_support_full: bool


#: Families with analytically known spectral support.  Gaussian and Laplacian
#: spectral densities are positive everywhere; the constant kernel's spectral
#: measure is a point mass at the origin.
TRANSLATION_INVARIANT_CATALOG = {
    GAUSSIAN: TranslationInvariantMeta(True),
    LAPLACIAN: TranslationInvariantMeta(True),
    CONSTANT: TranslationInvariantMeta(False),
}


@dataclass(frozen=True)
class ContinuousKernel:
    family: str
    bandwidth: float | None = None
    dim: int | None = None

    def __post_init__(self):
        if self.family not in CONTINUOUS_FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        # bandwidth None means "choose from data" (median heuristic)
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth!r}")
        if self.dim is not None and self.dim < 1:
            raise ValueError("dim must be >= 1")

    @property
    def meta(self) -> TranslationInvariantMeta | None:
        return TRANSLATION_INVARIANT_CATALOG.get(self.family)

    def with_bandwidth(self, bandwidth: float) -> "ContinuousKernel":
        return ContinuousKernel(self.family, bandwidth, self.dim)

    def to_json(self) -> dict:
        out = {"type": self.family}
        if self.bandwidth is not None:
            out["bandwidth"] = self.bandwidth
        if self.dim is not None:
            out["dim"] = self.dim
        return out

    def gram(self, X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
        """Gram matrix between the rows of ``X`` and ``Y``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape[1] != Y.shape[1] or (self.dim is not None and X.shape[1] != self.dim):
            raise ShapeError("input dimension does not match the kernel")
        if self.family == CONSTANT:
            return np.ones((X.shape[0], Y.shape[0]))
        if self.family == DISCRETE_DELTA:
            return np.all(X[:, None, :] == Y[None, :, :], axis=2).astype(float)
        if self.bandwidth is None:
            raise ValueError(f"{self.family} kernel has no bandwidth set")
        diff = X[:, None, :] - Y[None, :, :]
        if self.family == GAUSSIAN:
            sq = np.einsum("ijk,ijk->ij", diff, diff)
            return np.exp(-sq / (2.0 * self.bandwidth ** 2))
        return np.exp(-np.abs(diff).sum(axis=2) / self.bandwidth)


def eval_continuous(k: ContinuousKernel, x, y) -> float:
    """Evaluate a continuous kernel at two points of ``R^d``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ShapeError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(k.gram(x[None, :], y[None, :])[0, 0])


# product kernels -----------------------------------------------------------

class ProductKernelSpec:
    """Tensor product of component kernels."""

    def __init__(self, components: Sequence):
        components = tuple(components)
        if not components:
            raise ValueError("a product kernel needs at least one component")
        for c in components:
            if not isinstance(c, (FiniteKernel, ContinuousKernel)):
                raise TypeError(f"unsupported kernel component {c!r}")
        self.components = components

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def all_finite(self) -> bool:
        return all(isinstance(c, FiniteKernel) for c in self.components)

    @property
    def sizes(self) -> tuple:
        if not self.all_finite:
            raise TypeError("only finite product kernels have a finite space shape")
        return tuple(c.size for c in self.components)

    @property
    def grams(self) -> list:
        return [c.gram for c in self.components]

    def kronecker_gram(self) -> np.ndarray:
        out = self.components[0].gram
        for c in self.components[1:]:
            out = np.kron(out, c.gram)
        return out

    def to_json(self) -> dict:
        return {"type": "product", "components": [c.to_json() for c in self.components]}

    def __repr__(self):
        return f"ProductKernelSpec({list(self.components)!r})"


def as_product(k) -> ProductKernelSpec:
    if isinstance(k, ProductKernelSpec):
        return k
    if isinstance(k, (FiniteKernel, ContinuousKernel)):
        return ProductKernelSpec([k])
    return ProductKernelSpec(list(k))


def _mode_product(T: np.ndarray, G: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(G, T, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def embed(k, F: SignedMeasureTensor) -> np.ndarray:
    """Coordinates ``(G_1 kron ... kron G_M) vec(F)`` of the embedding of ``F``, as a tensor."""
    k = as_product(k)
    if not k.all_finite:
        raise TypeError("embedding coordinates need finite kernels")
    if tuple(F.sizes) != k.sizes:
        raise ShapeError(f"measure shape {F.sizes} does not match kernel shape {k.sizes}")
    kmodes = {c.mode for c in k.components}
    if F.mode == RATIONAL and FLOAT in kmodes:
        raise ModeError("rational measure with float kernel")
    if F.mode == FLOAT and RATIONAL in kmodes:
        grams = [c.gram.astype(float) for c in k.components]
    else:
        grams = k.grams
    Y = F.coefficients
    for axis, G in enumerate(grams):
        Y = _mode_product(Y, G, axis)
    return Y


def quad_form(k, F: SignedMeasureTensor):
    """Squared RKHS norm of the mean embedding of ``F``.

    Exact for rational inputs.  Float measures may be paired with rational
    kernels, whose Grams are converted to floats.
    """
    Y = embed(k, F)
    X = F.coefficients
    if F.mode == FLOAT:
        return float(np.sum(X * Y))
    return sum((a * b for a, b in zip(X.flat, Y.flat) if a), Fraction(0))


def quad_form_bruteforce(k, F: SignedMeasureTensor):
    """Double sum ``sum_{x,x'} k(x,x') F(x) F(x')`` over all index pairs."""
    k = as_product(k)
    grams = k.grams
    idx = list(np.ndindex(*F.sizes))
    X = F.coefficients
    total = Fraction(0) if F.mode == RATIONAL else 0.0
    for x in idx:
        if not X[x]:
            continue
        for y in idx:
            if not X[y]:
                continue
            kv = 1
            for m, G in enumerate(grams):
                kv = kv * G[x[m], y[m]]
            total += kv * X[x] * X[y]
    return total


def mmd2(k, P: SignedMeasureTensor, Q: SignedMeasureTensor):
    """Squared MMD between two distributions on the same finite space."""
    if tuple(P.sizes) != tuple(Q.sizes):
        raise ShapeError(f"shape mismatch {P.sizes} vs {Q.sizes}")
    return quad_form(k, P - Q)


# JSON ----------------------------------------------------------------------

def kernel_from_json(data: dict):
    """Parse the kernel JSON format into a kernel object."""
    if not isinstance(data, dict) or "type" not in data:
        raise ValueError("kernel JSON must be an object with a 'type' field")
    kind = data["type"]
    if kind == "finite":
        return FiniteKernel(data["gram"], name=data.get("name"))
    if kind == "product":
        comps = data.get("components")
        if not comps:
            raise ValueError("product kernel needs a non-empty 'components' list")
        parts = [kernel_from_json(c) for c in comps]
        if any(isinstance(p, ProductKernelSpec) for p in parts):
            flat = []
            for p in parts:
                flat.extend(p.components if isinstance(p, ProductKernelSpec) else [p])
            parts = flat
        return ProductKernelSpec(parts)
    if kind in CONTINUOUS_FAMILIES:
        bw = data.get("bandwidth")
        return ContinuousKernel(kind, None if bw is None else float(bw), data.get("dim"))
    raise ValueError(f"unknown kernel type {kind!r}")

