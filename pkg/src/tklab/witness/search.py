"""Numerical search for distributions whose independence measure has zero embedding.

Each restart minimizes ``HSIC^2(P) + rho * max(0, delta - ||P - prod(P_m)||_1)^2``
over the probability simplex by projected gradient descent with Armijo
backtracking.  A candidate with a tiny float objective is then repaired into
an exact rational witness and verified exactly; nothing is reported unless
that exact check passes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .. import kernels, linalg
from ..config import worker_count
from ..measure import RATIONAL, JointDistribution, SignedMeasureTensor
from .reports import I_CLASS, SEARCH, WitnessReport, build_report, verify_witness

FOUND = "found"
INCONCLUSIVE = "inconclusive"
CERTIFIED = "certified"
INCONCLUSIVE_MESSAGE = "no witness found within budget; inconclusive"

EVALS_PER_RESTART = 2000
DEFAULT_MAX_DENOMINATOR = 10**4
DEFAULT_THRESHOLD = 1e-18
PENALTY_WEIGHT = 1.0


@dataclass(frozen=True)
class SearchResult:
    status: str
    message: str
    witness: WitnessReport | None = None
    citation: str | None = None
    evaluations: int = 0
    restarts: int = 0

    def to_json(self) -> dict:
        out = {
            "status": self.status,
            "message": self.message,
            "citation": self.citation,
            "evaluations": self.evaluations,
            "restarts": self.restarts,
        }
        out["witness"] = self.witness.to_json() if self.witness is not None else None
        return out


# ---------------------------------------------------------------------------
# objective and gradient

def _marginals(P: np.ndarray) -> list:
    axes = range(P.ndim)
    return [P.sum(axis=tuple(a for a in axes if a != m)) for m in axes]


def _mode_products(T: np.ndarray, grams: list) -> np.ndarray:
    for axis, G in enumerate(grams):
        T = np.moveaxis(np.tensordot(G, T, axes=([1], [axis])), 0, axis)
    return T


def _broadcast(vec: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = vec.size
    return vec.reshape(shape)


def _marginal_pullback(R: np.ndarray, margs: list) -> np.ndarray:
    """Gradient of ``<R, prod(p_m(P))>`` with respect to ``P``."""
    M = R.ndim
    out = np.zeros_like(R)
    for m in range(M):
        W = R
        for n in range(M):
            if n != m:
                W = W * _broadcast(margs[n], n, M)
        c = W.sum(axis=tuple(a for a in range(M) if a != m))
        out = out + _broadcast(c, m, M)
    return out


def independence_residual(P: np.ndarray) -> np.ndarray:
    margs = _marginals(P)
    Q = margs[0]
    for p in margs[1:]:
        Q = np.multiply.outer(Q, p)
    return P - Q


def hsic2(P: np.ndarray, grams: list) -> float:
    A = independence_residual(P)
    return float(np.sum(A * _mode_products(A, grams)))


def hsic2_gradient(P: np.ndarray, grams: list) -> np.ndarray:
    """Analytic gradient of ``HSIC^2`` in the ambient coordinates of ``P``.

    With ``A = P - prod(p_m)`` and ``R = 2 K A``, the gradient is ``R`` minus
    the pullback of ``R`` through the marginal product.
    """
    A = independence_residual(P)
    R = 2.0 * _mode_products(A, grams)
    return R - _marginal_pullback(R, _marginals(P))


def objective(P: np.ndarray, grams: list, delta: float, rho: float = PENALTY_WEIGHT) -> float:
    A = independence_residual(P)
    hinge = max(0.0, delta - float(np.abs(A).sum()))
    return float(np.sum(A * _mode_products(A, grams))) + rho * hinge * hinge


def objective_gradient(P: np.ndarray, grams: list, delta: float, rho: float = PENALTY_WEIGHT) -> np.ndarray:
    A = independence_residual(P)
    margs = _marginals(P)
    R = 2.0 * _mode_products(A, grams)
    g = R - _marginal_pullback(R, margs)
    hinge = max(0.0, delta - float(np.abs(A).sum()))
    if hinge > 0:
        S = np.sign(A)
        dnorm = S - _marginal_pullback(S, margs)
        g = g - 2.0 * rho * hinge * dnorm
    return g


def project_simplex(x: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = x.reshape(-1)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0).reshape(x.shape)


# ---------------------------------------------------------------------------
# exact repair

def _zero_embedding_subspace(k: kernels.ProductKernelSpec) -> list:
    """Exact basis of ``{A : K A = 0, every marginal of A is 0}``."""
    sizes = k.sizes
    K = linalg.to_fraction_matrix(k.kronecker_gram())
    rows = [list(r) for r in K]
    N = len(rows)
    for m, s in enumerate(sizes):
        for i in range(s):
            row = [Fraction(0)] * N
            for flat, idx in enumerate(np.ndindex(*sizes)):
                if idx[m] == i:
                    row[flat] = Fraction(1)
            rows.append(row)
    return linalg.nullspace(rows, N)


def _round_distribution(p: np.ndarray, max_den: int) -> list:
    vals = [Fraction(float(x)).limit_denominator(max_den) for x in p]
    vals = [max(v, Fraction(0)) for v in vals]
    top = max(range(len(vals)), key=lambda i: (vals[i], -i))
    vals[top] += 1 - sum(vals, Fraction(0))
    return vals


def _rounded_projection(basis: list, x: list, max_den: int) -> list:
    """Project ``x`` onto ``span(basis)``, rounding the basis coordinates."""
    k = len(basis)
    gram = [[sum((a * b for a, b in zip(basis[i], basis[j])), Fraction(0)) for j in range(k)] for i in range(k)]
    rhs = [sum((a * b for a, b in zip(basis[i], x)), Fraction(0)) for i in range(k)]
    coef = [c.limit_denominator(max_den) for c in linalg.solve(gram, rhs)]
    out = [Fraction(0)] * len(x)
    for c, vec in zip(coef, basis):
        if c:
            out = [o + c * v for o, v in zip(out, vec)]
    return out


def exact_repair(P: np.ndarray, k, basis: list, max_den: int = DEFAULT_MAX_DENOMINATOR):
    """Turn a near-witness ``P`` into an exact one, or return ``None``.

    Marginals are rounded to rationals with bounded denominators.  The float
    residual ``P - prod(p_m)`` is projected onto the subspace of
    zero-marginal, zero-embedding tensors, and its basis coordinates are
    rounded the same way.  The candidate ``prod(p_m) + A`` is accepted only
    if it is a distribution and ``A != 0``.
    """
    if not basis:
        return None
    sizes = P.shape
    margs = [_round_distribution(p, max_den) for p in _marginals(P)]
    if any(v < 0 for m in margs for v in m):
        return None
    Q = np.array(margs[0], dtype=object)
    for m in margs[1:]:
        Q = np.multiply.outer(Q, np.array(m, dtype=object))
    A_float = independence_residual(P).reshape(-1)
    A_round = [Fraction(float(x)).limit_denominator(max_den) for x in A_float]
    A = _rounded_projection(basis, A_round, max_den)
    if all(a == 0 for a in A):
        return None
    flat = [q + a for q, a in zip(Q.reshape(-1), A)]
    if any(v < 0 for v in flat):
        return None
    joint = JointDistribution.from_flat(sizes, flat, RATIONAL)
    witness = SignedMeasureTensor.from_flat(sizes, A, RATIONAL)
    report = build_report(k, witness, I_CLASS, SEARCH, joint=joint, citation="search")
    if not verify_witness(k, report).ok:
        return None
    return report


# ---------------------------------------------------------------------------
# restarts

@dataclass(frozen=True)
class _RestartOutcome:
    report: WitnessReport | None
    evaluations: int
    best: float


def _run_restart(k, grams, basis, seed, r, evals, delta, threshold, max_den) -> _RestartOutcome:
    rng = np.random.default_rng([seed, r])
    sizes = k.sizes
    P = rng.dirichlet(np.ones(math.prod(sizes))).reshape(sizes)
    f = objective(P, grams, delta)
    used = 1
    step = 1.0
    while used < evals:
        if hsic2(P, grams) < threshold and f < threshold:
            break
        g = objective_gradient(P, grams, delta)
        accepted = False
        t = min(step * 2.0, 1e6)
        while used < evals:
            cand = project_simplex(P - t * g)
            d = cand - P
            fc = objective(cand, grams, delta)
            used += 1
            if fc <= f + float(np.sum(g * d)) + float(np.sum(d * d)) / (2.0 * t):
                accepted = True
                break
            t *= 0.5
            if t < 1e-14:
                break
        if not accepted or np.array_equal(cand, P):
            break
        P, f, step = cand, fc, t
    best = hsic2(P, grams)
    report = None
    if best < threshold:
        report = exact_repair(P, k, basis, max_den)
    return _RestartOutcome(report, used, best)


def search_I_witness(
    k,
    budget: int = 100_000,
    seed: int = 0,
    delta=Fraction(1, 100),
    threads: int | None = None,
    max_denominator: int = DEFAULT_MAX_DENOMINATOR,
    threshold: float = DEFAULT_THRESHOLD,
) -> SearchResult:
    """Look for a joint distribution ``P != prod(P_m)`` with ``HSIC(P) = 0``.

    Rule-based decisions short-circuit the search: a certified positive
    answer returns ``status="certified"`` and a constructed counterexample is
    returned directly.  Otherwise ``ceil(budget / 2000)`` seeded restarts are
    run; restart ``r`` draws from ``default_rng([seed, r])``.  Restarts are
    merged by index, so the result does not depend on ``threads``.
    """
    from .. import properties

    k = kernels.as_product(k)
    if not k.all_finite:
        raise TypeError("witness search needs finite component kernels")
    if k.n_components < 2:
        raise ValueError("witness search needs at least two components")
    if any(c.mode != RATIONAL for c in k.components):
        raise TypeError("witness search needs exact Gram matrices")
    report = properties.decide_product_properties(list(k.components))
    verdict = report.product[properties.I_CHAR]
    if verdict.status == properties.HOLDS:
        return SearchResult(CERTIFIED, f"certified I-characteristic ({verdict.citation})", None, verdict.citation)
    if verdict.status == properties.FAILS:
        return SearchResult(FOUND, f"witness constructed ({verdict.citation})", verdict.witness, verdict.citation)

    delta = float(Fraction(delta)) if not isinstance(delta, float) else delta
    if delta < 0:
        raise ValueError("delta must be non-negative")
    grams = [np.asarray(G, dtype=float) for G in k.grams]
    basis = _zero_embedding_subspace(k)
    n_restarts = max(1, math.ceil(budget / EVALS_PER_RESTART))
    threads = worker_count() if threads is None else max(1, threads)
    total = 0
    r = 0
    with ThreadPoolExecutor(max_workers=threads) as pool:
        while r < n_restarts:
            chunk = list(range(r, min(r + threads, n_restarts)))
            evals = [min(EVALS_PER_RESTART, budget - i * EVALS_PER_RESTART) for i in chunk]
            outcomes = list(pool.map(
                lambda args: _run_restart(k, grams, basis, seed, args[0], args[1], delta, threshold, max_denominator),
                zip(chunk, evals),
            ))
            for idx, out in zip(chunk, outcomes):
                total += out.evaluations
                if out.report is not None:
                    return SearchResult(FOUND, f"exact witness found at restart {idx}", out.report, "search", total, idx + 1)
            r = chunk[-1] + 1
    return SearchResult(INCONCLUSIVE, INCONCLUSIVE_MESSAGE, None, None, total, n_restarts)
