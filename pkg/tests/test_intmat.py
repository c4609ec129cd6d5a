import math

from hypothesis import given, strategies as st

from siegellab.intmat import (
    bareiss_det,
    bareiss_rank,
    complete_basis,
    hnf,
    integer_kernel,
    plucker_int,
    saturate,
    sign_normalize,
    vector_gcd,
    xgcd,
)

small = st.integers(-9, 9)


def matmul(A, B):
    return [[sum(a * b for a, b in zip(row, col)) for col in zip(*B)] for row in A]


@given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6))
def test_xgcd_bezout(a, b):
    g, x, y = xgcd(a, b)
    assert g == math.gcd(a, b)
    assert a * x + b * y == g


def test_hnf_shape():
    H = hnf([[2, 4, 6], [1, 3, 5]])
    assert H == [[1, 1, 1], [0, 2, 4]]
    assert hnf([[0, 0], [0, 0]]) == []


@given(st.lists(st.lists(small, min_size=4, max_size=4), min_size=1, max_size=3),
       st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(-3, 3)), max_size=6))
def test_hnf_is_invariant_under_row_operations(rows, ops):
    mixed = [r[:] for r in rows]
    m = len(mixed)
    for i, j, k in ops:
        i, j = i % m, j % m
        if i != j:
            mixed[i] = [a + k * b for a, b in zip(mixed[i], mixed[j])]
    mixed.reverse()
    assert hnf(mixed) == hnf(rows)


@given(st.lists(st.lists(small, min_size=4, max_size=4), min_size=1, max_size=3))
def test_hnf_canonical_form(rows):
    H = hnf(rows)
    assert len(H) == bareiss_rank(rows)
    pivots = [next(j for j, x in enumerate(r) if x) for r in H]
    assert pivots == sorted(set(pivots))
    for i, p in enumerate(pivots):
        assert H[i][p] > 0
        for k in range(i):
            assert 0 <= H[k][p] < H[i][p]


@given(st.lists(st.lists(small, min_size=4, max_size=4), min_size=1, max_size=3))
def test_integer_kernel(rows):
    K = integer_kernel(rows, 4)
    assert len(K) == 4 - bareiss_rank(rows)
    for k in K:
        assert all(sum(a * b for a, b in zip(r, k)) == 0 for r in rows)


@given(st.lists(small, min_size=2, max_size=5).filter(lambda v: vector_gcd(v) == 1))
def test_complete_basis_is_unimodular(v):
    U = complete_basis(v)
    assert [row[0] for row in U] == list(v)
    assert abs(bareiss_det(U)) == 1


def test_saturate_removes_index():
    # span{(2,0,0),(0,1,1)} has saturation containing (1,0,0)
    S = saturate([[2, 0, 0], [0, 1, 1]])
    assert S == [[1, 0, 0], [0, 1, 1]]


@given(st.lists(st.lists(small, min_size=4, max_size=4), min_size=2, max_size=2))
def test_plucker_relation_for_planes(rows):
    p12, p13, p14, p23, p24, p34 = plucker_int(rows)
    assert p12 * p34 - p13 * p24 + p14 * p23 == 0


def test_plucker_equivariance_under_gl2z():
    rows = [[1, 2, 0, 3], [0, 1, 1, -1]]
    g = [[2, 1], [1, 1]]
    assert plucker_int(matmul(g, rows)) == plucker_int(rows)


def test_sign_normalize():
    assert sign_normalize([0, -2, 3]) == (0, 2, -3)
    assert sign_normalize([1, -1]) == (1, -1)
