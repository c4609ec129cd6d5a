import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from siegellab.errors import ValidationError
from siegellab.rng import DEFAULT_BLOCK
from siegellab.lattice import (
    UnimodularLattice,
    count_primitive_in_ball,
    enumerate_lattice_points,
    gauss_reduce,
    haar_block,
    haar_bases,
    haar_sample_sl2,
    lambda1_batch,
    lambda_chi,
    lll_reduce,
    primitive_points_in_ball,
    shortest_vector,
    sl2_primitive_points,
)


def cusp_basis(x, y):
    return np.array([[1.0, x], [0.0, y]]) / math.sqrt(y)


def test_shortest_vector_examples():
    assert shortest_vector(UnimodularLattice(np.eye(2)))[1] == pytest.approx(1.0)
    assert shortest_vector(UnimodularLattice(cusp_basis(0.3, 4.0)))[1] == pytest.approx(0.5)
    assert shortest_vector(UnimodularLattice(np.diag([3.0, 1 / 3])))[1] == pytest.approx(1 / 3)


def test_degenerate_basis_rejected():
    with pytest.raises(ValidationError):
        UnimodularLattice([[1.0, 2.0], [2.0, 4.0]])


def test_renormalized_to_unit_covolume():
    L = UnimodularLattice([[2.0, 1.0], [0.0, 3.0]])
    assert abs(abs(L.det) - 1) < 1e-9
    g = np.array([[2.0, 1.0], [1.0, 1.0]])
    assert abs(abs(L.act(g).det) - 1) < 1e-9


@given(st.integers(0, 10**6), st.integers(3, 5))
def test_shortest_vector_against_enumeration(seed, n):
    gen = np.random.default_rng(seed)
    B = gen.normal(size=(n, n)) + 2 * np.eye(n)
    L = UnimodularLattice(B)
    vec, length = shortest_vector(L)
    assert length == pytest.approx(np.linalg.norm(L.basis @ np.array(vec.coords)))
    _, P = enumerate_lattice_points(L.basis, length * 1.01, reduce=False)
    assert np.linalg.norm(P, axis=1).min() >= length * (1 - 1e-9)


def test_primitive_points_small_ball():
    pts = {v.coords for v in primitive_points_in_ball(2, 1.5)}
    assert pts == {(0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1)}


def test_primitive_points_naive_oracle_3d():
    got = [v.coords for v in primitive_points_in_ball(3, 2)]
    naive = [z for z in product(range(-2, 3), repeat=3)
             if sum(t * t for t in z) < 4 and math.gcd(*z) == 1]
    assert got == sorted(naive)
    assert len(got) == len(set(got))


def test_primitive_density():
    ratio = count_primitive_in_ball(2, 200) / 200**2
    assert ratio == pytest.approx(6 / math.pi, rel=0.01)


def test_haar_bases_unimodular_and_deterministic():
    x, y, t = haar_block(3, 0, 1000)
    B = haar_bases(x, y, t)
    assert np.allclose(np.linalg.det(B), 1.0, atol=1e-9)
    assert np.all(np.abs(x) <= 0.5) and np.all(y >= np.sqrt(1 - x * x) - 1e-15)
    assert np.all((t >= 0) & (t < np.pi))
    x2, _, _ = haar_block(3, 0, 1000)
    assert np.array_equal(x, x2)
    # single draws index into the default-size block of the same stream
    xb, yb, tb = haar_block(3, 0, DEFAULT_BLOCK)
    assert np.allclose(haar_sample_sl2(3, 5).basis, haar_bases(xb, yb, tb)[5])


def test_lambda1_batch_matches_y():
    x, y, t = haar_block(9, 0, 2000)
    lam = lambda1_batch(haar_bases(x, y, t))
    assert np.allclose(lam, 1 / np.sqrt(y), rtol=1e-9)


def test_lambda_chi():
    assert lambda_chi(np.eye(2), 1) == pytest.approx(1.0)
    a = np.diag([math.exp(-1), math.exp(1)])
    assert lambda_chi(a, 1) == pytest.approx(math.exp(-1))
    assert lambda_chi(np.eye(4), 2) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        lambda_chi(np.eye(5), 2)


@given(st.integers(0, 10**6))
def test_gauss_and_lll_are_unimodular_changes(seed):
    gen = np.random.default_rng(seed)
    B = gen.normal(size=(2, 2))
    Bred, U = gauss_reduce(B)
    assert abs(round(np.linalg.det(U))) == 1
    assert np.allclose(B @ U, Bred)
    b1, b2 = Bred[:, 0], Bred[:, 1]
    assert np.linalg.norm(b1) <= np.linalg.norm(b2) * (1 + 1e-12)
    assert abs(b1 @ b2) <= 0.5 * (b1 @ b1) * (1 + 1e-9)
    C = gen.normal(size=(4, 4))
    Cred, V = lll_reduce(C)
    assert abs(round(np.linalg.det(V))) == 1
    assert np.allclose(C @ V, Cred)


@given(st.integers(0, 10**6))
def test_sl2_kernel_matches_generic_enumeration(seed):
    x, y, t = haar_block(seed, 0, 4)
    B = haar_bases(x, y, t)
    from siegellab.lattice import gauss_reduce_batch

    b1, b2 = gauss_reduce_batch(B)
    owner, pts, _ = sl2_primitive_points(b1, b2, 3.0)
    for i in range(4):
        Z, P = enumerate_lattice_points(B[i], 3.0)
        keep = (np.gcd.reduce(np.abs(Z), axis=1) == 1) & (np.linalg.norm(P, axis=1) < 3.0)
        assert (owner == i).sum() == keep.sum()
