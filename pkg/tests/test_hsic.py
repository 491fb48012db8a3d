import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_distribution, random_kernel
from tklab.hsic import (
    SampleBlock,
    centered_trace_hsic,
    dhsic_from_grams,
    dhsic_vstat,
    empirical_distribution,
    median_heuristic,
    permutation_stream,
    permutation_test,
    population_hsic,
)
from tklab.kernels import ContinuousKernel, ProductKernelSpec, delta_kernel, signed_delta_kernel
from tklab.measure import ShapeError, SignedMeasureTensor, marginals, product_measure
from tklab.witness import fixture

F = Fraction
GAUSS = ContinuousKernel("gaussian")
DELTA = ContinuousKernel("discrete-delta")


def vstat_oracle(grams) -> Fraction:
    """The three sums of the V-statistic written out with explicit loops."""
    n = len(grams[0])
    M = len(grams)
    t1 = sum((math.prod(G[i][j] for G in grams) for i in range(n) for j in range(n)), F(0)) / n**2
    t2 = math.prod(sum((G[i][j] for i in range(n) for j in range(n)), F(0)) / n**2 for G in grams)
    t3 = sum((math.prod(sum((G[i][j] for j in range(n)), F(0)) / n for G in grams) for i in range(n)), F(0)) * 2 / n
    assert M >= 1
    return t1 + t2 - t3


class TestPopulation:
    def test_product_distribution(self):
        rng = np.random.default_rng(2)
        k = ProductKernelSpec([random_kernel(rng, 2), random_kernel(rng, 3)])
        P = product_measure([SignedMeasureTensor(["1/3", "2/3"]), SignedMeasureTensor(["1/2", "1/4", "1/4"])])
        assert population_hsic(k, P) == 0

    def test_three_bit_joint(self):
        fx = fixture("example2-w1")
        P = fx.joints[0]
        assert population_hsic(fx.kernel, P) == 0
        assert P != product_measure(marginals(P))

    def test_diagonal_two_by_two(self):
        k = ProductKernelSpec([signed_delta_kernel()] * 2)
        P = SignedMeasureTensor.from_flat([2, 2], ["1/2", 0, 0, "1/2"])
        assert population_hsic(k, P) == 1

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            population_hsic(ProductKernelSpec([delta_kernel(3)] * 2), SignedMeasureTensor.from_flat([2, 2], ["1/4"] * 4))


class TestVStatistic:
    def test_single_observation(self):
        s = SampleBlock.from_blocks([[0.3], [1.7]])
        assert dhsic_vstat(s, [GAUSS.with_bandwidth(1.0)] * 2) == pytest.approx(0.0, abs=1e-15)

    def test_two_delta_points(self):
        s = SampleBlock.from_blocks([[1, 2], [1, 2]])
        grams = [DELTA.gram(s.block(m)) for m in range(2)]
        oracle = vstat_oracle([[[F(int(x)) for x in row] for row in G] for G in grams])
        assert oracle == F(1, 4)
        assert dhsic_vstat(s, [DELTA, DELTA]) == pytest.approx(0.25, abs=1e-15)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            n = int(rng.integers(2, 8))
            codes = rng.integers(0, 3, size=(n, 3))
            grams = [(codes[:, [m]] == codes[:, [m]].T).astype(int) for m in range(3)]
            exact = vstat_oracle([[[F(int(x)) for x in row] for row in G] for G in grams])
            assert dhsic_from_grams([G.astype(float) for G in grams]) == pytest.approx(float(exact), abs=1e-12)

    def test_trace_identity(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            n = int(rng.integers(2, 101))
            X, Y = rng.normal(size=(n, 2)), rng.normal(size=(n, 1)) + rng.normal(size=(n, 1))
            s = SampleBlock.from_blocks([X, Y])
            grams = [GAUSS.with_bandwidth(1.3).gram(X), ContinuousKernel("laplacian", 0.8).gram(Y)]
            assert dhsic_from_grams(grams) == pytest.approx(centered_trace_hsic(*grams), abs=1e-10)
            assert dhsic_vstat(s, [GAUSS.with_bandwidth(1.3), ContinuousKernel("laplacian", 0.8)]) == pytest.approx(
                dhsic_from_grams(grams), abs=1e-15)

    def test_plug_in_consistency(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            sizes = [int(rng.integers(2, 4)) for _ in range(int(rng.integers(2, 4)))]
            comps = [random_kernel(rng, s) for s in sizes]
            n = int(rng.integers(2, 40))
            codes = np.column_stack([rng.integers(0, s, size=n) for s in sizes])
            grams = [np.asarray(c.gram, dtype=float)[np.ix_(codes[:, m], codes[:, m])] for m, c in enumerate(comps)]
            exact = population_hsic(ProductKernelSpec(comps), empirical_distribution(codes, sizes))
            assert dhsic_from_grams(grams) == pytest.approx(float(exact), abs=1e-10)
            exact_grams = [[[c.gram[a, b] for b in codes[:, m]] for a in codes[:, m]] for m, c in enumerate(comps)]
            assert vstat_oracle(exact_grams) == exact

    def test_dimension_mismatch(self):
        s = SampleBlock.from_blocks([np.zeros((4, 2)), np.zeros(4)])
        with pytest.raises(ShapeError):
            dhsic_vstat(s, [ContinuousKernel("gaussian", 1.0, dim=3), GAUSS])

    @settings(max_examples=100, deadline=None)
    @given(arrays(float, st.tuples(st.integers(1, 20), st.integers(2, 4)), elements=st.floats(-1e3, 1e3)))
    def test_non_negative(self, data):
        s = SampleBlock(data, tuple((c,) for c in range(data.shape[1])))
        for fam in ("gaussian", "laplacian", "discrete-delta"):
            assert dhsic_vstat(s, [ContinuousKernel(fam)] * data.shape[1]) >= -1e-12

    @settings(max_examples=50, deadline=None)
    @given(arrays(float, st.tuples(st.integers(2, 15), st.integers(2, 3)), elements=st.floats(-10, 10)), st.integers(0, 2**32 - 1))
    def test_row_permutation_invariance(self, data, seed):
        perm = np.random.default_rng(seed).permutation(data.shape[0])
        groups = tuple((c,) for c in range(data.shape[1]))
        ks = [GAUSS.with_bandwidth(1.0)] * data.shape[1]
        a = dhsic_vstat(SampleBlock(data, groups), ks)
        b = dhsic_vstat(SampleBlock(data[perm], groups), ks)
        assert a == pytest.approx(b, abs=1e-12)


class TestMedianHeuristic:
    def test_two_points(self):
        assert median_heuristic([0.0, 2.0]) == 2.0

    def test_all_equal(self):
        assert median_heuristic([0.0, 0.0, 0.0]) == 1.0

    def test_three_points(self):
        assert median_heuristic([0.0, 1.0, 3.0]) == 2.0

    def test_lower_median(self):
        # distances 1, 2, 3, 1, 2, 1 sorted: 1 1 1 2 2 3, lower median 1
        assert median_heuristic([0.0, 1.0, 2.0, 3.0]) == 1.0

    def test_needs_two(self):
        with pytest.raises(ValueError):
            median_heuristic([1.0])


class TestSampleBlock:
    def test_overlap(self):
        with pytest.raises(ValueError):
            SampleBlock(np.zeros((3, 2)), ((0,), (0, 1)))

    def test_missing(self):
        with pytest.raises(ValueError):
            SampleBlock(np.array([[1.0, np.nan]]), ((0,), (1,)))

    def test_unequal_rows(self):
        with pytest.raises(ShapeError):
            SampleBlock.from_blocks([np.zeros(3), np.zeros(4)])


class TestPermutationTest:
    def test_dependent(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=200)
        res = permutation_test(SampleBlock.from_blocks([x, x]), [GAUSS, GAUSS], B=199, seed=1)
        assert res.p_value <= 0.01

    def test_p_value_range(self):
        rng = np.random.default_rng(5)
        s = SampleBlock.from_blocks([rng.uniform(size=60), rng.uniform(size=60)])
        res = permutation_test(s, [GAUSS, GAUSS], B=99, seed=5)
        assert 1 / 100 <= res.p_value <= 1

    def test_single_permutation(self):
        rng = np.random.default_rng(9)
        for seed in range(10):
            s = SampleBlock.from_blocks([rng.normal(size=10), rng.normal(size=10)])
            assert permutation_test(s, [GAUSS, GAUSS], B=1, seed=seed).p_value in (0.5, 1.0)

    def test_deterministic_and_thread_independent(self):
        rng = np.random.default_rng(3)
        s = SampleBlock.from_blocks([rng.normal(size=40), rng.normal(size=40), rng.normal(size=40)])
        a = permutation_test(s, [GAUSS] * 3, B=50, seed=4, threads=1)
        b = permutation_test(s, [GAUSS] * 3, B=50, seed=4, threads=3)
        assert a == b

    def test_stream_is_pure(self):
        a = permutation_stream(3, 7, 20, 3)
        b = permutation_stream(3, 7, 20, 3)
        assert len(a) == 2 and all(np.array_equal(x, y) for x, y in zip(a, b))
        assert not np.array_equal(permutation_stream(3, 8, 20, 3)[0], a[0])

    def test_bandwidths_reported(self):
        s = SampleBlock.from_blocks([[0.0, 2.0, 5.0], [1.0, 1.0, 1.0]])
        res = permutation_test(s, [GAUSS, GAUSS], B=5, seed=0)
        assert res.bandwidths == (3.0, 1.0)

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            permutation_test(SampleBlock.from_blocks([[1.0], [2.0]]), [GAUSS, GAUSS], B=5)


class TestEmpirical:
    def test_counts(self):
        P = empirical_distribution([[0, 1], [0, 1], [1, 0], [0, 0]], [2, 2])
        assert P.flat() == [F(1, 4), F(1, 2), F(1, 4), 0]

    def test_random_is_distribution(self):
        rng = np.random.default_rng(0)
        P = random_distribution(rng, [2, 3])
        assert P.mass() == 1
