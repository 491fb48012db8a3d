import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import is_pd_oracle, kron_object, psd_grams, random_kernel
from tklab import properties as pr
from tklab.kernels import (
    ContinuousKernel,
    FiniteKernel,
    ProductKernelSpec,
    constant_kernel,
    delta_kernel,
    quad_form,
    quad_form_bruteforce,
    signed_delta_kernel,
)
from tklab.measure import SignedMeasureTensor, product_measure
from tklab.witness import constructions, verify_witness

F = Fraction
NON_I = (pr.UNIVERSAL, pr.CHARACTERISTIC, pr.TENSOR_CHAR, pr.TENSOR0_CHAR)


def statuses(report):
    return {p: v.status for p, v in report.product.items()}


def form(G, v):
    return sum((F(v[i]) * F(G[i][j]) * F(v[j]) for i in range(len(v)) for j in range(len(v))), F(0))


def singular_or_pd_kernel(rng, n):
    """Half the time ``|u|^2 I - u u^T`` (null space spanned by a small ``u``), else PD."""
    if n >= 2 and rng.random() < 0.5:
        u = rng.integers(-1, 2, size=n)
        while not u.any():
            u = rng.integers(-1, 2, size=n)
        G = int(u @ u) * np.eye(n, dtype=int) - np.outer(u, u)
        return FiniteKernel([[F(int(x)) for x in row] for row in G])
    B = rng.integers(-2, 3, size=(n, n))
    G = B.T @ B + np.eye(n, dtype=int)
    return FiniteKernel([[F(int(x)) for x in row] for row in G])


class TestSingleKernel:
    def test_identity_universal(self):
        assert pr.is_universal_finite(delta_kernel(2)).status == pr.HOLDS

    def test_signed_delta_not_universal(self):
        v = pr.is_universal_finite(signed_delta_kernel())
        assert v.status == pr.FAILS
        a, b = v.certificate
        assert a == b != 0
        assert v.witness is not None and verify_witness(signed_delta_kernel(), v.witness).ok

    def test_one_point(self):
        assert pr.is_universal_finite(FiniteKernel([[1]])).status == pr.HOLDS
        assert pr.is_characteristic_finite(FiniteKernel([[1]])).status == pr.HOLDS

    def test_signed_delta_characteristic(self):
        assert pr.is_characteristic_finite(signed_delta_kernel()).status == pr.HOLDS

    def test_constant_not_characteristic(self):
        v = pr.is_characteristic_finite(constant_kernel(2))
        assert v.status == pr.FAILS
        a, b = v.certificate
        assert a == -b != 0

    @settings(max_examples=150)
    @given(psd_grams())
    def test_certificates_valid(self, G):
        k = FiniteKernel(G)
        for v in (pr.is_universal_finite(k), pr.is_characteristic_finite(k)):
            if v.status == pr.FAILS:
                cert = v.certificate
                assert any(cert)
                assert form(G, cert) == 0
                if v.property == pr.CHARACTERISTIC:
                    assert sum(cert) == 0

    @settings(max_examples=150)
    @given(psd_grams())
    def test_characteristic_oracle(self, G):
        # characteristic iff the form is positive on zero-sum vectors: oracle via e_i - e_n basis minors
        n = len(G)
        k = FiniteKernel(G)
        if n == 1:
            assert pr.is_characteristic_finite(k).status == pr.HOLDS
            return
        B = [[F(int(i == j)) - F(int(j == n - 1)) for j in range(n)] for i in range(n - 1)]
        R = [[sum(B[a][x] * G[x][y] * B[b][y] for x in range(n) for y in range(n)) for b in range(n - 1)] for a in range(n - 1)]
        expect = pr.HOLDS if is_pd_oracle(R) else pr.FAILS
        assert pr.is_characteristic_finite(k).status == expect


class TestClosure:
    def test_universal_gives_everything(self):
        res = pr.apply_implication_closure({pr.UNIVERSAL: pr.HOLDS})
        assert all(v.status == pr.HOLDS for v in res.facts.values())

    def test_tensor_char_gives_universal_for_products(self):
        res = pr.apply_implication_closure({pr.TENSOR_CHAR: pr.HOLDS})
        assert res.facts[pr.UNIVERSAL].status == pr.HOLDS

    def test_tensor_char_alone_without_product_rule(self):
        res = pr.apply_implication_closure({pr.TENSOR_CHAR: pr.HOLDS}, product_equivalence=False)
        assert res.facts[pr.UNIVERSAL].status == pr.UNDECIDED
        assert res.facts[pr.TENSOR0_CHAR].status == pr.HOLDS

    def test_contradiction(self):
        with pytest.raises(pr.InconsistentFactsError) as info:
            pr.apply_implication_closure({pr.CHARACTERISTIC: pr.FAILS, pr.UNIVERSAL: pr.HOLDS})
        props = {p for p, _ in info.value.clash}
        assert pr.CHARACTERISTIC in props

    def test_failure_propagates_down(self):
        res = pr.apply_implication_closure({pr.TENSOR0_CHAR: pr.FAILS}, product_equivalence=False)
        for p in (pr.TENSOR_CHAR, pr.CHARACTERISTIC, pr.UNIVERSAL):
            assert res.facts[p].status == pr.FAILS

    def test_fixed_point(self):
        for p in pr.PRODUCT_PROPERTIES:
            for s in (pr.HOLDS, pr.FAILS):
                try:
                    res = pr.apply_implication_closure({p: s})
                except pr.InconsistentFactsError:
                    continue
                again = pr.apply_implication_closure({q: v for q, v in res.facts.items() if v.status != pr.UNDECIDED})
                assert {q: v.status for q, v in again.facts.items()} == {q: v.status for q, v in res.facts.items()}


class TestDecide:
    def test_two_signed_deltas(self):
        rep = pr.decide_product_properties([signed_delta_kernel(), signed_delta_kernel()])
        assert all(c[pr.CHARACTERISTIC].status == pr.HOLDS for c in rep.components)
        assert statuses(rep) == {
            pr.UNIVERSAL: pr.FAILS,
            pr.CHARACTERISTIC: pr.FAILS,
            pr.TENSOR_CHAR: pr.FAILS,
            pr.TENSOR0_CHAR: pr.HOLDS,
            pr.I_CHAR: pr.HOLDS,
        }
        assert rep.product[pr.I_CHAR].citation == "Thm2i"

    def test_mixed_triple(self):
        comps = [signed_delta_kernel(), delta_kernel(), delta_kernel()]
        assert pr.decide_product_properties(comps).product[pr.I_CHAR].status == pr.UNDECIDED
        fx = constructions.fixture("example3")
        rep = pr.decide_product_properties(comps, [fx.report])
        assert rep.product[pr.I_CHAR].status == pr.FAILS
        assert rep.product[pr.I_CHAR].witness is fx.report

    def test_identity_triple(self):
        rep = pr.decide_product_properties([delta_kernel()] * 3)
        assert set(statuses(rep).values()) == {pr.HOLDS}

    def test_non_characteristic_component(self):
        rep = pr.decide_product_properties([constant_kernel(2), delta_kernel(2)])
        iv = rep.product[pr.I_CHAR]
        assert iv.status == pr.FAILS and iv.citation == "Thm2ii"
        assert verify_witness(ProductKernelSpec([constant_kernel(2), delta_kernel(2)]), iv.witness).ok

    def test_singletons_ignored(self):
        base = pr.decide_product_properties([signed_delta_kernel(), signed_delta_kernel()])
        padded = pr.decide_product_properties([signed_delta_kernel(), FiniteKernel([[3]]), signed_delta_kernel()])
        assert statuses(base) == statuses(padded)

    def test_zero_point_kernel(self):
        rep = pr.decide_product_properties([FiniteKernel([[0]]), delta_kernel(2)])
        for p in (pr.UNIVERSAL, pr.CHARACTERISTIC, pr.TENSOR_CHAR):
            assert rep.product[p].status == pr.FAILS
        # a zero-sum factor on the one-point space is zero
        assert rep.product[pr.TENSOR0_CHAR].status == pr.HOLDS

    def test_report_json_stable(self):
        rep = pr.decide_product_properties([signed_delta_kernel(), delta_kernel()])
        a = rep.to_json()
        assert list(a["product"]) == list(pr.PRODUCT_PROPERTIES)
        assert a == pr.decide_product_properties([signed_delta_kernel(), delta_kernel()]).to_json()

    def test_rejects_continuous(self):
        with pytest.raises(TypeError):
            pr.decide_product_properties([ContinuousKernel("gaussian", 1.0)])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(1, 3), min_size=1, max_size=3).flatmap(lambda s: st.tuples(*[psd_grams(n) for n in s])))
    def test_every_failure_certified(self, grams):
        comps = [FiniteKernel(G) for G in grams]
        k = ProductKernelSpec(comps)
        rep = pr.decide_product_properties(comps)
        for p, v in rep.product.items():
            if v.status == pr.HOLDS:
                assert v.citation
            if v.status != pr.FAILS or v.witness is None:
                continue
            W = v.witness
            assert not W.witness.is_zero()
            assert quad_form(k, W.witness) == 0
            assert verify_witness(k, W).ok
            assert W.cls in pr.CLASS_SUPERSETS and pr.PROPERTY_CLASS[p] in pr.CLASS_SUPERSETS[W.cls]

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(1, 3), min_size=1, max_size=3).flatmap(lambda s: st.tuples(*[psd_grams(n) for n in s])))
    def test_report_closed(self, grams):
        rep = pr.decide_product_properties([FiniteKernel(G) for G in grams])
        facts = {p: v for p, v in rep.product.items() if v.status != pr.UNDECIDED}
        closed = pr.apply_implication_closure(facts, product_equivalence=False)
        assert {p: v.status for p, v in closed.facts.items()} == statuses(rep)


class TestProductUniversality:
    @settings(max_examples=150, deadline=None)
    @given(st.lists(st.integers(2, 4), min_size=2, max_size=3).flatmap(lambda s: st.tuples(*[psd_grams(n) for n in s])))
    def test_kronecker_agreement(self, grams):
        comps = [FiniteKernel(G) for G in grams]
        K = kron_object(grams)
        oracle = is_pd_oracle(K.tolist()) if K.shape[0] <= 8 else None
        rep = pr.decide_product_properties(comps)
        conj = all(pr.is_universal_finite(c).status == pr.HOLDS for c in comps)
        assert (rep.product[pr.UNIVERSAL].status == pr.HOLDS) == conj
        from tklab.kernels import PD, validate_psd

        assert (validate_psd(K).status == PD) == conj
        if oracle is not None:
            assert oracle == conj

    def test_tensor_char_matches_grid_search(self):
        # brute force over product measures with entries in {-1, 0, 1}
        rng = np.random.default_rng(41)
        grid = {n: [v for v in itertools.product((-1, 0, 1), repeat=n) if any(v)] for n in (2, 3)}
        for _ in range(30):
            sizes = [int(rng.integers(2, 4)) for _ in range(2)]
            comps = [singular_or_pd_kernel(rng, n) for n in sizes]
            k = ProductKernelSpec(comps)
            found = False
            for f1 in grid[sizes[0]]:
                for f2 in grid[sizes[1]]:
                    if sum(f1) * sum(f2) != 0:
                        continue
                    Fm = product_measure([SignedMeasureTensor(list(f1)), SignedMeasureTensor(list(f2))])
                    if quad_form_bruteforce(k, Fm) == 0:
                        found = True
                        break
                if found:
                    break
            rep = pr.decide_product_properties(comps)
            assert (rep.product[pr.TENSOR_CHAR].status == pr.FAILS) == found
            assert rep.product[pr.TENSOR_CHAR].status == rep.product[pr.UNIVERSAL].status


class TestMonotonicity:
    def test_adding_universal_component(self):
        rng = np.random.default_rng(77)
        for _ in range(100):
            sizes = [int(rng.integers(2, 4)) for _ in range(int(rng.integers(2, 4)))]
            comps = [random_kernel(rng, n) for n in sizes]
            extra = singular_or_pd_kernel(rng, int(rng.integers(2, 4)))
            if pr.is_universal_finite(extra).status != pr.HOLDS:
                continue
            base = statuses(pr.decide_product_properties(comps))
            grown = statuses(pr.decide_product_properties(comps + [extra]))
            assert {p: base[p] for p in NON_I} == {p: grown[p] for p in NON_I}

    def test_one_point_component_empties_zero_sum_products(self):
        # a universal one-point factor forces every zero-sum product to vanish
        comps = [constant_kernel(2), constant_kernel(2)]
        assert pr.decide_product_properties(comps).product[pr.TENSOR0_CHAR].status == pr.FAILS
        grown = pr.decide_product_properties(comps + [FiniteKernel([[1]])])
        assert grown.product[pr.TENSOR0_CHAR].status == pr.HOLDS

    def test_i_char_not_monotone(self):
        # two characteristic components decide I-char; a third universal one leaves it open
        pair = [signed_delta_kernel(), signed_delta_kernel()]
        assert pr.decide_product_properties(pair).product[pr.I_CHAR].status == pr.HOLDS
        grown = pr.decide_product_properties(pair + [delta_kernel(2)])
        assert grown.product[pr.I_CHAR].status == pr.UNDECIDED


class TestTranslationInvariant:
    def test_full_support(self):
        comps = [ContinuousKernel("gaussian", 1.0), ContinuousKernel("gaussian", 2.0), ContinuousKernel("laplacian", 1.0)]
        rep = pr.classify_translation_invariant(comps)
        assert set(statuses(rep).values()) == {pr.HOLDS}
        assert all(v.provenance == pr.THEOREM for v in rep.product.values())

    def test_constant_breaks_independence(self):
        rep = pr.classify_translation_invariant([ContinuousKernel("gaussian", 1.0), ContinuousKernel("constant")])
        assert rep.product[pr.I_CHAR].status == pr.FAILS
        assert rep.components[1][pr.CHARACTERISTIC].status == pr.FAILS

    def test_single_gaussian(self):
        rep = pr.classify_translation_invariant([ContinuousKernel("gaussian", 1.0)])
        assert rep.components[0][pr.CHARACTERISTIC].status == pr.HOLDS
        assert rep.components[0][pr.UNIVERSAL].status == pr.HOLDS

    def test_missing_meta(self):
        with pytest.raises(ValueError):
            pr.classify_translation_invariant([ContinuousKernel("discrete-delta")])
