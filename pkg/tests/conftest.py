"""Shared helpers and independent oracles for the test suite."""

from __future__ import annotations

import itertools
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from tklab.kernels import FiniteKernel
from tklab.measure import SignedMeasureTensor

DATA = Path(__file__).parent / "data"


def frac_array(values, shape=None) -> np.ndarray:
    arr = np.empty(len(values), dtype=object)
    arr[:] = [Fraction(v) for v in values]
    return arr if shape is None else arr.reshape(shape)


def random_rational(rng, lo=-5, hi=5, max_den=6) -> Fraction:
    return Fraction(int(rng.integers(lo, hi + 1)), int(rng.integers(1, max_den + 1)))


def random_measure(rng, sizes, lo=-5, hi=5) -> SignedMeasureTensor:
    n = int(np.prod(sizes))
    return SignedMeasureTensor.from_flat(sizes, [random_rational(rng, lo, hi) for _ in range(n)])


def random_distribution(rng, sizes, max_weight=6) -> SignedMeasureTensor:
    w = [int(rng.integers(0, max_weight + 1)) for _ in range(int(np.prod(sizes)))]
    if sum(w) == 0:
        w[0] = 1
    total = sum(w)
    return SignedMeasureTensor.from_flat(sizes, [Fraction(x, total) for x in w])


def random_psd_gram(rng, n, rank=None) -> list:
    """``B^T B`` for a random small-integer ``B``; ``rank`` rows (default random)."""
    r = int(rng.integers(1, n + 1)) if rank is None else rank
    B = rng.integers(-2, 3, size=(r, n))
    G = B.T @ B
    scale = Fraction(1, int(rng.integers(1, 4)))
    return [[Fraction(int(G[i, j])) * scale for j in range(n)] for i in range(n)]


def random_kernel(rng, n, rank=None) -> FiniteKernel:
    return FiniteKernel(random_psd_gram(rng, n, rank))


# ---------------------------------------------------------------------------
# oracles

def det_fraction(M) -> Fraction:
    """Determinant by cofactor expansion (small matrices only)."""
    n = len(M)
    if n == 0:
        return Fraction(1)
    if n == 1:
        return Fraction(M[0][0])
    total = Fraction(0)
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        total += (-1) ** j * Fraction(M[0][j]) * det_fraction(minor)
    return total


def is_pd_oracle(G) -> bool:
    """Sylvester's criterion: every leading principal minor positive."""
    G = [[Fraction(x) for x in row] for row in G]
    return all(det_fraction([r[:k] for r in G[:k]]) > 0 for k in range(1, len(G) + 1))


def is_psd_oracle(G) -> bool:
    """Every principal minor non-negative."""
    G = [[Fraction(x) for x in row] for row in G]
    n = len(G)
    for k in range(1, n + 1):
        for idx in itertools.combinations(range(n), k):
            if det_fraction([[G[i][j] for j in idx] for i in idx]) < 0:
                return False
    return True


def kron_object(grams) -> np.ndarray:
    out = np.array(grams[0], dtype=object)
    for G in grams[1:]:
        out = np.kron(out, np.array(G, dtype=object))
    return out


def kron_quad_oracle(grams, flat) -> Fraction:
    """``vec(F)^T (G_1 kron ... kron G_M) vec(F)`` with the explicit Kronecker matrix."""
    K = kron_object(grams)
    x = [Fraction(v) for v in flat]
    return sum((x[i] * K[i, j] * x[j] for i in range(len(x)) for j in range(len(x))), Fraction(0))


# ---------------------------------------------------------------------------
# hypothesis strategies

small_fraction = st.builds(Fraction, st.integers(-6, 6), st.integers(1, 6))
nonneg_weight = st.integers(0, 6)
sizes_strategy = st.lists(st.integers(1, 3), min_size=1, max_size=3)


@st.composite
def measures(draw, sizes=None):
    sizes = draw(sizes_strategy) if sizes is None else sizes
    n = int(np.prod(sizes))
    vals = draw(st.lists(small_fraction, min_size=n, max_size=n))
    return SignedMeasureTensor.from_flat(sizes, vals)


@st.composite
def distributions(draw, sizes=None, min_components=1):
    if sizes is None:
        sizes = draw(st.lists(st.integers(1, 3), min_size=min_components, max_size=3))
    n = int(np.prod(sizes))
    w = draw(st.lists(nonneg_weight, min_size=n, max_size=n).filter(lambda xs: sum(xs) > 0))
    total = sum(w)
    return SignedMeasureTensor.from_flat(sizes, [Fraction(x, total) for x in w])


@st.composite
def psd_grams(draw, n=None):
    n = draw(st.integers(1, 3)) if n is None else n
    r = draw(st.integers(1, n))
    B = draw(st.lists(st.lists(st.integers(-2, 2), min_size=n, max_size=n), min_size=r, max_size=r))
    return [[Fraction(sum(B[k][i] * B[k][j] for k in range(r))) for j in range(n)] for i in range(n)]


@pytest.fixture
def data_dir() -> Path:
    return DATA
