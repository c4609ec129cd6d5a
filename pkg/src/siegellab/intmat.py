"""Exact integer linear algebra on lists of Python ints.

Everything here is fraction-free: Bareiss elimination for rank and
determinant, extended-gcd row operations for Hermite normal form, integer
kernels and saturation. Python ints give arbitrary precision for free.
"""

from __future__ import annotations

from itertools import combinations
from math import gcd
from typing import Iterable, Sequence

IntMatrix = list[list[int]]


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, s, t)`` with ``s*a + t*b == g == gcd(a, b) >= 0``."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if a < 0:
        a, s0, t0 = -a, -s0, -t0
    return a, s0, t0


def as_int_matrix(rows: Iterable[Iterable[int]]) -> IntMatrix:
    return [[int(x) for x in row] for row in rows]


def bareiss_rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank of an integer matrix by fraction-free elimination."""
    A = as_int_matrix(rows)
    if not A:
        return 0
    m, n = len(A), len(A[0])
    rank = 0
    prev = 1
    for c in range(n):
        piv = next((i for i in range(rank, m) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        p = A[rank][c]
        for i in range(rank + 1, m):
            a_ic = A[i][c]
            row_i, row_r = A[i], A[rank]
            A[i] = [(p * row_i[j] - a_ic * row_r[j]) // prev for j in range(n)]
        prev = p
        rank += 1
        if rank == m:
            break
    return rank


def bareiss_det(rows: Sequence[Sequence[int]]) -> int:
    A = as_int_matrix(rows)
    n = len(A)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        p = A[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (p * A[i][j] - A[i][k] * A[k][j]) // prev
        prev = p
    return sign * A[n - 1][n - 1]


def hnf(rows: Sequence[Sequence[int]]) -> IntMatrix:
    """Row-style Hermite normal form; zero rows are dropped.

    Pivots are positive and entries above each pivot lie in ``[0, pivot)``,
    which makes the result the unique representative of the row lattice.
    """
    A = as_int_matrix(rows)
    m = len(A)
    n = len(A[0]) if m else 0
    r = 0
    for c in range(n):
        if r == m:
            break
        for i in range(r + 1, m):
            b = A[i][c]
            if b == 0:
                continue
            a = A[r][c]
            g, s, t = xgcd(a, b)
            u, v = a // g, b // g
            row_r, row_i = A[r], A[i]
            A[r] = [s * x + t * y for x, y in zip(row_r, row_i)]
            A[i] = [u * y - v * x for x, y in zip(row_r, row_i)]
        p = A[r][c]
        if p == 0:
            continue
        if p < 0:
            A[r] = [-x for x in A[r]]
            p = -p
        for i in range(r):
            q = A[i][c] // p
            if q:
                A[i] = [x - q * y for x, y in zip(A[i], A[r])]
        r += 1
    return A[:r]


def integer_kernel(rows: Sequence[Sequence[int]], ncols: int | None = None) -> IntMatrix:
    """Lattice basis (as rows) of ``{z in Z^n : M z = 0}``."""
    M = as_int_matrix(rows)
    n = ncols if ncols is not None else (len(M[0]) if M else 0)
    m = len(M)
    aug = [[M[i][j] for i in range(m)] + [int(j == k) for k in range(n)] for j in range(n)]
    H = hnf(aug)
    kernel = [row[m:] for row in H if all(x == 0 for x in row[:m])]
    return kernel


def saturate(rows: Sequence[Sequence[int]]) -> IntMatrix:
    """HNF basis of the saturation ``span_Q(rows) ∩ Z^n``."""
    M = as_int_matrix(rows)
    n = len(M[0])
    K = integer_kernel(M, n)
    if not K:
        return [[int(i == j) for j in range(n)] for i in range(n)]
    return hnf(integer_kernel(K, n))


def complete_basis(v: Sequence[int]) -> IntMatrix:
    """Unimodular matrix (list of rows) whose first column is the primitive ``v``."""
    v = [int(x) for x in v]
    n = len(v)
    g0 = 0
    for x in v:
        g0 = gcd(g0, x)
    if g0 != 1:
        raise ValueError(f"vector {v} is not primitive")
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    w = list(v)
    # Fold entries pairwise from the bottom; each 2x2 step E has det 1 and
    # U accumulates E^{-1} on the right, so that U @ (V v) = v throughout.
    for i in range(n - 1, 0, -1):
        a, b = w[i - 1], w[i]
        if b == 0:
            continue
        g, s, t = xgcd(a, b)
        p, q = a // g, b // g
        w[i - 1], w[i] = g, 0
        for row in U:
            x, y = row[i - 1], row[i]
            row[i - 1], row[i] = p * x + q * y, -t * x + s * y
    if w[0] == -1:
        for row in U:
            row[0] = -row[0]
    return U


def minor_subsets(n: int, ell: int) -> list[tuple[int, ...]]:
    return list(combinations(range(n), ell))


def plucker_int(rows: Sequence[Sequence[int]]) -> list[int]:
    """Exact ℓ×ℓ minors in lexicographic column-subset order."""
    M = as_int_matrix(rows)
    ell, n = len(M), len(M[0])
    if ell == 1:
        return list(M[0])
    out = []
    for cols in combinations(range(n), ell):
        out.append(bareiss_det([[row[c] for c in cols] for row in M]))
    return out


def vector_gcd(v: Iterable[int]) -> int:
    g = 0
    for x in v:
        g = gcd(g, int(x))
    return g


def sign_normalize(v: Sequence[int]) -> tuple[int, ...]:
    """Flip sign so that the first nonzero entry is positive."""
    for x in v:
        if x != 0:
            return tuple(v) if x > 0 else tuple(-y for y in v)
    return tuple(v)
