"""Population and empirical (d)HSIC, and a permutation independence test.

The empirical statistic is the V-statistic: the population quantity
evaluated at the empirical distribution.  On discrete samples it therefore
equals :func:`population_hsic` of the empirical joint exactly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .config import worker_count
from .kernels import GAUSSIAN, LAPLACIAN, ContinuousKernel
from .measure import JointDistribution, ShapeError, i_class_element


def population_hsic(k, P) -> object:
    """Squared HSIC of a finite joint distribution: the embedding quadratic
    form of ``P - prod(P_m)``."""
    k = kernels.as_product(k)
    if tuple(P.sizes) != k.sizes:
        raise ShapeError(f"distribution shape {P.sizes} does not match kernel shape {k.sizes}")
    return kernels.quad_form(k, i_class_element(P))


@dataclass(frozen=True)
class SampleBlock:
    """``n`` joint observations split into column groups, one per component."""

    data: np.ndarray
    groups: tuple

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] < 1:
            raise ShapeError("samples must be a non-empty 2-D array")
        if not np.all(np.isfinite(data)):
            raise ValueError("samples contain missing or non-finite values")
        groups = tuple(tuple(int(c) for c in g) for g in self.groups)
        if not groups or any(not g for g in groups):
            raise ValueError("every component needs at least one column")
        cols = [c for g in groups for c in g]
        if len(set(cols)) != len(cols):
            raise ValueError("column groups overlap")
        if any(c < 0 or c >= data.shape[1] for c in cols):
            raise ValueError("column index out of range")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "groups", groups)

    @classmethod
    def from_blocks(cls, blocks: Sequence) -> "SampleBlock":
        """Build from per-component arrays; 1-D arrays are single columns."""
        arrays = []
        for b in blocks:
            a = np.asarray(b, dtype=float)
            arrays.append(a[:, None] if a.ndim == 1 else a)
        if len({a.shape[0] for a in arrays}) != 1:
            raise ShapeError("all components need the same number of rows")
        groups, start = [], 0
        for a in arrays:
            groups.append(tuple(range(start, start + a.shape[1])))
            start += a.shape[1]
        return cls(np.hstack(arrays), tuple(groups))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def n_components(self) -> int:
        return len(self.groups)

    def block(self, m: int) -> np.ndarray:
        return self.data[:, list(self.groups[m])]


@dataclass(frozen=True)
class TestResult:
    """Outcome of a permutation test."""

    __test__ = False

    statistic: float
    permutations: int
    p_value: float
    seed: int
    bandwidths: tuple
    config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "statistic": self.statistic,
            "permutations": self.permutations,
            "p_value": self.p_value,
            "seed": self.seed,
            "bandwidths": list(self.bandwidths),
            "config": dict(self.config),
        }


def median_heuristic(X) -> float:
    """Lower median of pairwise Euclidean distances over distinct pairs; 1.0 if that is 0."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n < 2:
        raise ValueError("the median heuristic needs at least two points")
    iu = np.triu_indices(n, k=1)
    diff = X[:, None, :] - X[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))[iu]
    dist.sort()
    med = float(dist[(dist.size - 1) // 2])
    return med if med > 0 else 1.0


def resolve_kernels(samples: SampleBlock, kernel_list: Sequence[ContinuousKernel]) -> list:
    """Fill in missing bandwidths with the median heuristic and check dimensions."""
    if len(kernel_list) != samples.n_components:
        raise ShapeError(f"expected {samples.n_components} kernels, got {len(kernel_list)}")
    out = []
    for m, k in enumerate(kernel_list):
        block = samples.block(m)
        if k.dim is not None and k.dim != block.shape[1]:
            raise ShapeError(f"kernel {m + 1} expects dimension {k.dim}, block has {block.shape[1]}")
        if k.family in (GAUSSIAN, LAPLACIAN) and k.bandwidth is None:
            k = k.with_bandwidth(median_heuristic(block) if samples.n >= 2 else 1.0)
        out.append(k)
    return out


def sample_grams(samples: SampleBlock, kernel_list: Sequence[ContinuousKernel]) -> list:
    return [k.gram(samples.block(m)) for m, k in enumerate(resolve_kernels(samples, kernel_list))]


def dhsic_from_grams(grams: Sequence[np.ndarray]) -> float:
    """V-statistic from per-component sample Grams.

    ``mean(prod K_m) + prod(mean K_m) - 2 mean_i prod_m mean_j K_m[i, j]``.
    """
    joint = np.ones_like(grams[0])
    both = 1.0
    rows = np.ones(grams[0].shape[0])
    for K in grams:
        joint = joint * K
        both *= K.mean()
        rows = rows * K.mean(axis=1)
    return float(joint.mean() + both - 2.0 * rows.mean())


def dhsic_vstat(samples: SampleBlock, kernel_list: Sequence[ContinuousKernel]) -> float:
    """Empirical squared dHSIC (V-statistic), ``O(n^2 M)``."""
    return dhsic_from_grams(sample_grams(samples, kernel_list))


def centered_trace_hsic(K: np.ndarray, L: np.ndarray) -> float:
    """Two-component V-statistic written as ``trace(K H L H) / n^2``."""
    n = K.shape[0]
    H = np.eye(n) - np.full((n, n), 1.0 / n)
    return float(np.trace(K @ H @ L @ H)) / n**2


def permutation_stream(seed: int, r: int, n: int, n_components: int) -> list:
    """Row permutations for replicate ``r``: one per component after the first,
    drawn in order from ``default_rng([seed, r])``."""
    rng = np.random.default_rng([seed, r])
    return [rng.permutation(n) for _ in range(n_components - 1)]


def permutation_test(samples: SampleBlock, kernel_list, B: int = 199, seed: int = 0, threads: int | None = None) -> TestResult:
    """Permutation test of joint independence.

    Replicate ``r`` (1-based) permutes the rows of components ``2..M``
    independently with :func:`permutation_stream`; component 1 stays fixed.
    ``p = (1 + #{replicate >= observed}) / (1 + B)``.
    """
    if samples.n < 2:
        raise ValueError("the permutation test needs n >= 2")
    if B < 1:
        raise ValueError("B must be >= 1")
    resolved = resolve_kernels(samples, kernel_list)
    grams = [k.gram(samples.block(m)) for m, k in enumerate(resolved)]
    observed = dhsic_from_grams(grams)

    def replicate(r: int) -> float:
        perms = permutation_stream(seed, r, samples.n, len(grams))
        permuted = [grams[0]] + [G[np.ix_(p, p)] for G, p in zip(grams[1:], perms)]
        return dhsic_from_grams(permuted)

    workers = worker_count() if threads is None else max(1, threads)
    if workers == 1:
        stats = [replicate(r) for r in range(1, B + 1)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(replicate, range(1, B + 1)))
    exceed = sum(1 for s in stats if s >= observed)
    p = (1 + exceed) / (1 + B)
    bandwidths = tuple(k.bandwidth for k in resolved)
    return TestResult(observed, B, p, seed, bandwidths)


def empirical_distribution(codes, sizes: Sequence[int]) -> JointDistribution:
    """Exact empirical joint of integer-coded discrete samples (0-based codes)."""
    codes = np.asarray(codes, dtype=int)
    if codes.ndim != 2 or codes.shape[1] != len(sizes):
        raise ShapeError("codes must be an n x M array matching sizes")
    n = codes.shape[0]
    counts = np.zeros(tuple(sizes), dtype=int)
    for row in codes:
        counts[tuple(row)] += 1
    arr = np.empty(counts.shape, dtype=object)
    arr.reshape(-1)[:] = [Fraction(int(c), n) for c in counts.flat]
    return JointDistribution(arr)
