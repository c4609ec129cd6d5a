"""Unimodular lattices: Haar sampling on SL2, reduction, enumeration.

Bases are stored column-wise, so the lattice is ``basis @ Z^n``. The
enumeration kernels are breadth-first and vectorized over all partial
coefficient vectors of one tree level at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator

import numpy as np

from . import rng as _rng
from .errors import ResourceGuardError, ValidationError

CANDIDATE_GUARD = 10**8
REL_GUARD = 1e-12
HAAR_STREAM = "haar-sl2"


@dataclass(frozen=True)
class PrimitiveVector:
    coords: tuple[int, ...]
    norm: float


class UnimodularLattice:
    """Lattice ``basis @ Z^n`` rescaled to covolume 1 on construction."""

    def __init__(self, basis, renormalize: bool = True):
        B = np.array(basis, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValidationError("basis must be a square matrix")
        if not np.all(np.isfinite(B)):
            raise ValidationError("basis has non-finite entries")
        n = B.shape[0]
        det = float(np.linalg.det(B))
        scale = float(np.prod(np.linalg.norm(B, axis=0)))
        if scale == 0.0 or abs(det) <= 1e-12 * scale:
            raise ValidationError("degenerate (near-singular) basis")
        if renormalize:
            B = B / abs(det) ** (1.0 / n)
        self.basis = B

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.basis))

    def act(self, g) -> "UnimodularLattice":
        return UnimodularLattice(np.asarray(g, dtype=float) @ self.basis)

    def __repr__(self) -> str:
        return f"UnimodularLattice(dim={self.dim})"


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class ModularSample:
    x: float
    y: float
    theta: float

    def basis(self) -> np.ndarray:
        return haar_bases(np.array([self.x]), np.array([self.y]), np.array([self.theta]))[0]

    def lattice(self) -> UnimodularLattice:
        return UnimodularLattice(self.basis(), renormalize=False)


def modular_draws(gen: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Haar-distributed ``(x, y, theta)`` on the modular fundamental domain × [0, π)."""
    u1 = gen.random(size)
    u2 = 1.0 - gen.random(size)
    theta = np.pi * gen.random(size)
    x = np.sin((np.pi / 6.0) * (2.0 * u1 - 1.0))
    y = np.sqrt(1.0 - x * x) / u2
    return x, y, theta


def haar_bases(x, y, theta) -> np.ndarray:
    """Stack of bases ``Rot(θ)·y^{-1/2}·[[1, x], [0, y]]``, shape ``(m, 2, 2)``."""
    x, y, theta = (np.asarray(a, dtype=float) for a in (x, y, theta))
    s = 1.0 / np.sqrt(y)
    c, sn = np.cos(theta), np.sin(theta)
    out = np.empty(x.shape + (2, 2))
    # columns (1, 0)·s and (x, y)·s, rotated
    out[..., 0, 0] = c * s
    out[..., 1, 0] = sn * s
    out[..., 0, 1] = (c * x - sn * y) * s
    out[..., 1, 1] = (sn * x + c * y) * s
    return out


def haar_block(seed: int, block: int, size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return modular_draws(_rng.generator(seed, HAAR_STREAM, block), size)


def haar_samples(seed: int, count: int, block_size: int = _rng.DEFAULT_BLOCK):
    """Yield ``(block_index, x, y, theta)`` for ``count`` samples in fixed blocks."""
    for b, size in enumerate(_rng.block_sizes(count, block_size)):
        x, y, theta = haar_block(seed, b, size)
        yield b, x, y, theta


def haar_sample_sl2(seed: int, index: int = 0) -> UnimodularLattice:
    """Single Haar lattice, the ``index``-th draw of the seeded stream."""
    b, k = divmod(int(index), _rng.DEFAULT_BLOCK)
    x, y, theta = haar_block(seed, b, _rng.DEFAULT_BLOCK)
    return ModularSample(float(x[k]), float(y[k]), float(theta[k])).lattice()


# --- reduction ------------------------------------------------------------


def gauss_reduce_batch(bases: np.ndarray, max_iter: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Lagrange–Gauss reduction of a stack of 2×2 column bases.

    Returns ``(b1, b2)`` with ``|b1| <= |b2|`` and ``|<b1,b2>| <= |b1|^2/2``.
    """
    bases = np.asarray(bases, dtype=float)
    b1 = bases[..., :, 0].copy()
    b2 = bases[..., :, 1].copy()
    n1 = np.einsum("...i,...i->...", b1, b1)
    n2 = np.einsum("...i,...i->...", b2, b2)
    swap = n2 < n1
    b1[swap], b2[swap] = b2[swap].copy(), b1[swap].copy()
    n1, n2 = np.where(swap, n2, n1), np.where(swap, n1, n2)
    active = np.ones(n1.shape, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.nonzero(active)
        q = np.rint(np.einsum("...i,...i->...", b1[idx], b2[idx]) / n1[idx])
        nb2 = b2[idx] - q[..., None] * b1[idx]
        nn2 = np.einsum("...i,...i->...", nb2, nb2)
        done = nn2 >= n1[idx] * (1.0 - REL_GUARD)
        ob1 = b1[idx].copy()
        on1 = n1[idx].copy()
        new_b1 = np.where(done[..., None], ob1, nb2)
        new_b2 = np.where(done[..., None], nb2, ob1)
        b1[idx] = new_b1
        b2[idx] = new_b2
        n1[idx] = np.where(done, on1, nn2)
        n2[idx] = np.where(done, nn2, on1)
        still = active.copy()
        still[idx] = ~done
        active = still
    return b1, b2


def gauss_reduce(basis) -> tuple[np.ndarray, np.ndarray]:
    """Reduced basis and integer change of basis ``U`` (``reduced = basis @ U``)."""
    B = np.array(basis, dtype=float)
    U = np.eye(2, dtype=np.int64)
    for _ in range(10_000):
        if B[:, 1] @ B[:, 1] < B[:, 0] @ B[:, 0]:
            B = B[:, ::-1].copy()
            U = U[:, ::-1].copy()
        q = int(np.rint((B[:, 0] @ B[:, 1]) / (B[:, 0] @ B[:, 0])))
        if q == 0:
            break
        B[:, 1] -= q * B[:, 0]
        U[:, 1] -= q * U[:, 0]
    B = np.asarray(basis, dtype=float) @ U
    return B, U


def _gso(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = B.shape[1]
    Bs = np.zeros_like(B)
    mu = np.eye(n)
    bb = np.zeros(n)
    for i in range(n):
        v = B[:, i].copy()
        for j in range(i):
            mu[i, j] = (B[:, i] @ Bs[:, j]) / bb[j]
            v -= mu[i, j] * Bs[:, j]
        Bs[:, i] = v
        bb[i] = v @ v
    return mu, bb


def lll_reduce(basis, delta: float = 0.99, max_iter: int = 100_000) -> tuple[np.ndarray, np.ndarray]:
    """Floating LLL on columns; returns ``(basis @ U, U)`` with integer ``U``."""
    B0 = np.array(basis, dtype=float)
    n = B0.shape[1]
    B = B0.copy()
    U = np.eye(n, dtype=np.int64)
    k = 1
    it = 0
    while k < n:
        it += 1
        if it > max_iter:
            raise ResourceGuardError("LLL did not converge within its iteration budget")
        mu, bb = _gso(B)
        for j in range(k - 1, -1, -1):
            q = int(np.rint(mu[k, j]))
            if q:
                B[:, k] -= q * B[:, j]
                U[:, k] -= q * U[:, j]
                mu[k, : j + 1] -= q * mu[j, : j + 1]
        if bb[k] >= (delta - mu[k, k - 1] ** 2) * bb[k - 1]:
            k += 1
        else:
            B[:, [k - 1, k]] = B[:, [k, k - 1]]
            U[:, [k - 1, k]] = U[:, [k, k - 1]]
            k = max(k - 1, 1)
        if it % 50 == 0:
            B = B0 @ U
    return B0 @ U, U


# --- enumeration ------------------------------------------------------------


def _enumerate_upper(R: np.ndarray, radius: float, guard: int) -> np.ndarray:
    """All integer z with ``|R z| <= radius`` for upper-triangular ``R``.

    Breadth-first from the last coordinate; returns an ``(m, n)`` int64 array
    including the zero vector.
    """
    n = R.shape[0]
    r2 = radius * radius
    Z = np.zeros((1, 0), dtype=np.int64)
    partial = np.zeros(1)
    for i in range(n - 1, -1, -1):
        rii = R[i, i]
        if Z.shape[1]:
            off = Z[:, ::-1] @ R[i, i + 1 :]
        else:
            off = np.zeros(Z.shape[0])
        center = -off / rii
        budget = np.maximum(r2 - partial, 0.0)
        half = np.sqrt(budget) / abs(rii)
        lo = np.ceil(center - half).astype(np.int64)
        hi = np.floor(center + half).astype(np.int64)
        counts = np.maximum(hi - lo + 1, 0)
        total = int(counts.sum())
        if total > guard:
            raise ResourceGuardError(
                f"enumeration refused: {total} candidates exceed the guard of {guard}"
            )
        parent = np.repeat(np.arange(Z.shape[0]), counts)
        starts = np.cumsum(counts) - counts
        zi = lo[parent] + (np.arange(total) - starts[parent])
        # Z stores coordinates in reverse order (last coordinate first)
        Z = np.concatenate([Z[parent], zi[:, None]], axis=1)
        partial = partial[parent] + (rii * (zi - center[parent])) ** 2
        keep = partial <= r2
        Z, partial = Z[keep], partial[keep]
    return Z[:, ::-1].copy()


def enumerate_lattice_points(basis, radius: float, guard: int = CANDIDATE_GUARD,
                             reduce: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Integer coefficient vectors ``z != 0`` and points ``basis @ z`` with norm ≤ radius.

    The radius is inflated by a relative 1e-9 so callers can apply their own
    exact strict or weak threshold to the returned points.
    """
    B = np.asarray(basis, dtype=float)
    n = B.shape[1]
    if reduce and n >= 2:
        Bred, U = (gauss_reduce(B) if n == 2 else lll_reduce(B))
    else:
        Bred, U = B, np.eye(n, dtype=np.int64)
    R = np.linalg.qr(Bred, mode="r")
    Zr = _enumerate_upper(R, radius * (1.0 + 1e-9), guard)
    Zr = Zr[np.any(Zr != 0, axis=1)]
    Z = Zr @ U.T
    return Z, Z @ B.T


def primitive_mask(Z: np.ndarray) -> np.ndarray:
    if Z.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return np.gcd.reduce(np.abs(Z), axis=1) == 1


def shortest_vector(lattice: UnimodularLattice) -> tuple[PrimitiveVector, float]:
    """Exact shortest nonzero vector for dimension ≤ 8 (coordinates in the lattice basis)."""
    B = lattice.basis if isinstance(lattice, UnimodularLattice) else np.asarray(lattice, float)
    n = B.shape[1]
    if n > 8:
        raise ValidationError("shortest_vector supports dimension ≤ 8")
    if n == 1:
        return PrimitiveVector((1,), abs(float(B[0, 0]))), abs(float(B[0, 0]))
    if n == 2:
        Bred, U = gauss_reduce(B)
        z = U[:, 0]
        length = float(np.linalg.norm(Bred[:, 0]))
        return PrimitiveVector(tuple(int(t) for t in z), length), length
    Bred, U = lll_reduce(B)
    radius = float(np.min(np.linalg.norm(Bred, axis=0)))
    Z, P = enumerate_lattice_points(Bred, radius, reduce=False)
    norms = np.linalg.norm(P, axis=1)
    k = int(np.argmin(norms))
    z = U @ Z[k]
    length = float(norms[k])
    return PrimitiveVector(tuple(int(t) for t in z), length), length


# --- primitive integer points ----------------------------------------------------


def _ball_points(n: int, T: float, prefix: np.ndarray | None = None) -> np.ndarray:
    """Integer points with norm < T in lexicographic order (breadth-first)."""
    T2 = float(T) * float(T)
    Z = np.zeros((1, 0), dtype=np.int64) if prefix is None else prefix
    sq = (Z * Z).sum(axis=1)
    for _ in range(n - Z.shape[1]):
        rem = T2 - sq
        m = np.floor(np.sqrt(np.maximum(rem, 0.0))).astype(np.int64)
        # strictness: m^2 must be < rem
        m = np.where(m * m >= rem, m - 1, m)
        m = np.where((m + 1) ** 2 < rem, m + 1, m)
        counts = np.where(rem > 0, 2 * m + 1, 0)
        total = int(counts.sum())
        if total > CANDIDATE_GUARD:
            raise ResourceGuardError(f"enumeration refused: {total} candidates")
        parent = np.repeat(np.arange(Z.shape[0]), counts)
        starts = np.cumsum(counts) - counts
        zi = -m[parent] + (np.arange(total) - starts[parent])
        Z = np.concatenate([Z[parent], zi[:, None]], axis=1)
        sq = sq[parent] + zi * zi
    return Z


def primitive_points_in_ball(n: int, T: float) -> Iterator[PrimitiveVector]:
    """Every primitive integer vector of norm < T, once each, in lexicographic order."""
    if n < 2 or T < 1:
        raise ValidationError("need n ≥ 2 and T ≥ 1")
    T2 = float(T) ** 2
    a_max = math.isqrt(max(int(math.ceil(T2)) - 1, 0)) if T2 > 0 else 0
    while a_max * a_max >= T2:
        a_max -= 1
    for a in range(-a_max, a_max + 1):
        Z = _ball_points(n, T, np.array([[a]], dtype=np.int64))
        Z = Z[primitive_mask(Z)]
        norms = np.sqrt((Z * Z).sum(axis=1).astype(float))
        for z, r in zip(Z.tolist(), norms.tolist()):
            yield PrimitiveVector(tuple(z), r)


def count_primitive_in_ball(n: int, T: float) -> int:
    T2 = float(T) ** 2
    a_max = int(math.floor(math.sqrt(T2)))
    while a_max * a_max >= T2:
        a_max -= 1
    total = 0
    for a in range(-a_max, a_max + 1):
        Z = _ball_points(n, T, np.array([[a]], dtype=np.int64))
        total += int(primitive_mask(Z).sum())
    return total


# --- exterior powers -------------------------------------------------------------


def compound_matrix(g, ell: int) -> np.ndarray:
    """ℓ-th compound: entries are ℓ×ℓ minors, rows and columns in lexicographic subset order.

    Accepts a single matrix or a stack ``(..., n, n)``.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[-1]
    if ell == 1:
        return g.copy()
    subsets = list(combinations(range(n), ell))
    rows = np.array(subsets)
    m = len(subsets)
    sub = g[..., rows[:, None, :, None], rows[None, :, None, :]]
    return np.linalg.det(sub).reshape(g.shape[:-2] + (m, m))


SUPPORTED_CHI = {(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)}


def lambda_chi(g, ell: int) -> float:
    """Shortest nonzero vector length of ``∧^ℓ g · Z^{C(n,ℓ)}``.

    ``g`` is an n×n matrix (or lattice) acting on Z^n; supported for n ≤ 4, ℓ ∈ {1, 2}.
    """
    G = g.basis if isinstance(g, UnimodularLattice) else np.asarray(g, dtype=float)
    n = G.shape[0]
    if (ell, n) not in SUPPORTED_CHI or ell > 2:
        raise ValidationError(f"unsupported model (ℓ, n) = ({ell}, {n})")
    C = compound_matrix(G, ell)
    return shortest_vector(UnimodularLattice(C, renormalize=False))[1]


# --- vectorized SL2 kernels ------------------------------------------------------


def sl2_primitive_points(b1: np.ndarray, b2: np.ndarray, radius: float,
                         half: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Primitive points of norm < radius for a stack of Gauss-reduced SL2 bases.

    Returns ``(owner, points, coeffs)``; ``owner[k]`` is the lattice index of
    ``points[k] = m*b1 + n*b2`` with ``coeffs[k] = (m, n)``. With ``half=True``
    only one of ``±v`` is returned (``n > 0``, or ``n == 0`` and ``m == 1``).
    """
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    L = b1.shape[0]
    n1 = np.einsum("ij,ij->i", b1, b1)
    len1 = np.sqrt(n1)
    mu = np.einsum("ij,ij->i", b1, b2) / n1
    perp = np.abs(b1[:, 0] * b2[:, 1] - b1[:, 1] * b2[:, 0]) / len1
    R = float(radius) * (1.0 + 1e-9)
    nmax = np.floor(R / perp).astype(np.int64)
    # rows: (lattice, n) for n in 1..nmax
    counts_n = np.maximum(nmax, 0)
    total_rows = int(counts_n.sum())
    owner_r = np.repeat(np.arange(L), counts_n)
    starts = np.cumsum(counts_n) - counts_n
    n_r = 1 + np.arange(total_rows) - starts[owner_r]
    resid = np.maximum(R * R - (n_r * perp[owner_r]) ** 2, 0.0)
    halfw = np.sqrt(resid) / len1[owner_r]
    center = -n_r * mu[owner_r]
    lo = np.ceil(center - halfw).astype(np.int64)
    hi = np.floor(center + halfw).astype(np.int64)
    counts_m = np.maximum(hi - lo + 1, 0)
    total = int(counts_m.sum())
    if total > CANDIDATE_GUARD:
        raise ResourceGuardError(f"enumeration refused: {total} candidates")
    row = np.repeat(np.arange(total_rows), counts_m)
    st = np.cumsum(counts_m) - counts_m
    m = lo[row] + (np.arange(total) - st[row])
    nn = n_r[row]
    owner = owner_r[row]
    keep = np.gcd(m, nn) == 1
    m, nn, owner = m[keep], nn[keep], owner[keep]
    # the n == 0 line contributes ±b1 only
    axis_ok = len1 < radius
    a_owner = np.nonzero(axis_ok)[0]
    owner = np.concatenate([a_owner, owner])
    m = np.concatenate([np.ones(a_owner.size, dtype=np.int64), m])
    nn = np.concatenate([np.zeros(a_owner.size, dtype=np.int64), nn])
    pts = m[:, None] * b1[owner] + nn[:, None] * b2[owner]
    strict = np.einsum("ij,ij->i", pts, pts) < radius * radius
    owner, pts, m, nn = owner[strict], pts[strict], m[strict], nn[strict]
    if not half:
        owner = np.concatenate([owner, owner])
        pts = np.concatenate([pts, -pts])
        m = np.concatenate([m, -m])
        nn = np.concatenate([nn, -nn])
    order = np.argsort(owner, kind="stable")
    return owner[order], pts[order], np.stack([m[order], nn[order]], axis=1)


def lambda1_batch(bases: np.ndarray) -> np.ndarray:
    b1, _ = gauss_reduce_batch(bases)
    return np.sqrt(np.einsum("ij,ij->i", b1, b1))
