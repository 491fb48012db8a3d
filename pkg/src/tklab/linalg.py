"""Exact rational linear algebra on small dense matrices.

Matrices are lists of lists (or object arrays) of :class:`fractions.Fraction`.
The symmetric factorization is fraction-free: the input is scaled to an
integer matrix and eliminated with Bareiss updates, so every intermediate
entry is an integer minor and no square roots or divisions with remainder
occur.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

PSD = "PSD"
PD = "PD"
NOT_PSD = "NotPSD"


def to_fraction_matrix(G) -> list:
    return [[Fraction(v) for v in row] for row in np.asarray(G, dtype=object)]


def is_symmetric(G: Sequence[Sequence]) -> bool:
    n = len(G)
    return all(len(row) == n for row in G) and all(
        G[i][j] == G[j][i] for i in range(n) for j in range(i + 1, n)
    )


def _integer_scaled(G: list) -> list:
    lcm = 1
    for row in G:
        for v in row:
            lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    return [[int(v * lcm) for v in row] for row in G]


@dataclass
class SymmetricElimination:
    """Outcome of a diagonally pivoted symmetric elimination.

    ``pivots`` are the LDL^T diagonal entries in elimination order (exact
    fractions), ``order`` the matching row indices, ``remaining`` the indices
    never used as pivots.  ``negative`` is set when the remaining Schur
    complement is indefinite; it then holds ``(i, j)`` with ``i == j`` for a
    negative diagonal or ``i != j`` for a non-zero off-diagonal entry on a zero
    diagonal block.
    """

    pivots: list
    order: list
    remaining: list
    negative: tuple | None = None
    schur_sign: dict = field(default_factory=dict)


def symmetric_elimination(G: list) -> SymmetricElimination:
    """Fraction-free LDL^T with symmetric (diagonal) pivoting.

    At each step the largest positive remaining diagonal entry is chosen as
    pivot (first index on ties).  Elimination stops when no positive diagonal
    is left.  The Bareiss entries equal ``det(G_KK) * S`` where ``S`` is the
    Schur complement on the remaining indices, so their signs are the signs
    of ``S``.
    """
    n = len(G)
    A = _integer_scaled(G)
    scale = Fraction(1)
    if n:
        lcm = 1
        for row in G:
            for v in row:
                lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
        scale = Fraction(1, lcm)
    remaining = list(range(n))
    order: list = []
    pivots: list = []
    prev = 1
    while remaining:
        best = None
        for i in remaining:
            if A[i][i] > 0 and (best is None or A[i][i] > A[best][best]):
                best = i
        if best is None:
            break
        p = A[best][best]
        pivots.append(Fraction(p, prev) * scale)
        order.append(best)
        remaining.remove(best)
        for i in remaining:
            for j in remaining:
                if j < i:
                    continue
                v = (p * A[i][j] - A[i][best] * A[best][j]) // prev
                A[i][j] = v
                A[j][i] = v
        prev = p
    negative = None
    for i in remaining:
        if A[i][i] < 0:
            negative = (i, i)
            break
    if negative is None:
        for a, i in enumerate(remaining):
            for j in remaining[a + 1:]:
                if A[i][j] != 0:
                    negative = (i, j)
                    break
            if negative is not None:
                break
    sign = {}
    if negative is not None and negative[0] != negative[1]:
        i, j = negative
        sign[(i, j)] = 1 if A[i][j] > 0 else -1
    return SymmetricElimination(pivots, order, remaining, negative, sign)


def solve_many(A: list, columns: list) -> list:
    """Solve ``A x = b`` exactly for each ``b`` in ``columns`` (square non-singular ``A``)."""
    n = len(A)
    k = len(columns)
    M = [list(map(Fraction, A[i])) + [Fraction(b[i]) for b in columns] for i in range(n)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [v * inv for v in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [vr - f * vc if vc else vr for vr, vc in zip(M[r], M[c])]
    return [[M[i][n + j] for i in range(n)] for j in range(k)]


def solve(A: list, b: list) -> list:
    """Solve ``A x = b`` exactly for square non-singular ``A``."""
    return solve_many(A, [b])[0]


def quad(G: list, v: Sequence) -> Fraction:
    n = len(v)
    return sum((v[i] * G[i][j] * v[j] for i in range(n) for j in range(n) if v[i] and v[j]), Fraction(0))


def _lift_many(G: list, order: list, ys: list) -> list:
    """Extend each ``y`` (values on non-pivot indices) to a vector whose form
    value equals the Schur complement form ``y^T S y``."""
    n = len(G)
    vs = []
    for y in ys:
        v = [Fraction(0)] * n
        for i, val in y.items():
            v[i] = Fraction(val)
        vs.append(v)
    if order and vs:
        G_KK = [[G[a][b] for b in order] for a in order]
        rhs = [[-sum((G[a][r] * v[r] for r in y), Fraction(0)) for a in order] for v, y in zip(vs, ys)]
        for v, xK in zip(vs, solve_many(G_KK, rhs)):
            for a, val in zip(order, xK):
                v[a] = val
    return vs


@dataclass
class PSDResult:
    status: str
    pivots: list
    rank: int
    null_vectors: list
    negative_vector: list | None

    @property
    def certificate(self):
        if self.status == NOT_PSD:
            return self.negative_vector
        if self.status == PSD:
            return self.null_vectors[0]
        return self.pivots


def classify_psd(G) -> PSDResult:
    """Classify an exact symmetric matrix as PD, PSD (singular) or NotPSD.

    PSD results carry an exact null-space basis; NotPSD results carry ``v``
    with ``v^T G v < 0``.
    """
    G = to_fraction_matrix(G)
    if not is_symmetric(G):
        raise ValueError("matrix is not symmetric")
    el = symmetric_elimination(G)
    if el.negative is not None:
        i, j = el.negative
        y = {i: 1} if i == j else {i: 1, j: -el.schur_sign[(i, j)]}
        (v,) = _lift_many(G, el.order, [y])
        return PSDResult(NOT_PSD, el.pivots, len(el.pivots), [], v)
    if not el.remaining:
        return PSDResult(PD, el.pivots, len(el.pivots), [], None)
    nulls = _lift_many(G, el.order, [{r: 1} for r in el.remaining])
    return PSDResult(PSD, el.pivots, len(el.pivots), nulls, None)


def rref(rows: list) -> tuple:
    """Reduced row echelon form; returns ``(R, pivot_columns)``."""
    M = [list(map(Fraction, r)) for r in rows]
    if not M:
        return M, []
    ncol = len(M[0])
    pivots = []
    r = 0
    for c in range(ncol):
        piv = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][c]
        M[r] = [v * inv for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M[:r], pivots


def nullspace(rows: list, ncol: int) -> list:
    """Exact basis of ``{x : rows @ x = 0}``, one vector per free column."""
    R, pivots = rref(rows) if rows else ([], [])
    free = [c for c in range(ncol) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncol
        x[f] = Fraction(1)
        for row, pc in zip(R, pivots):
            x[pc] = -row[f]
        basis.append(x)
    return basis


def project_onto_span(basis: list, x: Sequence) -> list:
    """Orthogonal projection of ``x`` onto the span of ``basis`` (exact)."""
    if not basis:
        return [Fraction(0)] * len(x)
    k = len(basis)
    gram = [[sum((a * b for a, b in zip(basis[i], basis[j])), Fraction(0)) for j in range(k)] for i in range(k)]
    rhs = [sum((a * Fraction(b) for a, b in zip(basis[i], x)), Fraction(0)) for i in range(k)]
    coef = solve(gram, rhs)
    out = [Fraction(0)] * len(x)
    for c, vec in zip(coef, basis):
        if c:
            out = [o + c * v for o, v in zip(out, vec)]
    return out
