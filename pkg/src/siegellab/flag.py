"""Grassmannians in their Plücker embedding.

Points of Gr(ℓ, n) are handled three ways: as integer rational subspaces
(HNF basis plus primitive Plücker vector), as real orthonormal frames, and
as vectors of the Plücker cone in V = ∧^ℓ R^n. Plücker coordinates are
indexed by ℓ-subsets of the columns in lexicographic order, so index 0 is
the highest-weight vector e_1∧…∧e_ℓ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import ValidationError
from .intmat import (
    bareiss_rank,
    complete_basis,
    hnf,
    integer_kernel,
    plucker_int,
    saturate,
    sign_normalize,
    vector_gcd,
)
from .lattice import _ball_points, enumerate_lattice_points, primitive_mask

E = math.e
DEFAULT_C0 = 8.0
HERMITE_GAMMA2 = 2.0 / math.sqrt(3.0)
REL_GUARD = 1e-12


class OutsideChartError(ValidationError):
    """The top Plücker coordinate vanishes, so the affine chart is undefined."""


@dataclass(frozen=True)
class GrassmannModel:
    ell: int
    n: int

    def __post_init__(self) -> None:
        if not (isinstance(self.ell, int) and isinstance(self.n, int) and 1 <= self.ell < self.n):
            raise ValidationError(f"need 1 ≤ ℓ < n, got (ℓ, n) = ({self.ell}, {self.n})")

    @property
    def dim_V(self) -> int:
        return math.comb(self.n, self.ell)

    @property
    def d(self) -> int:
        return self.ell * (self.n - self.ell)

    @property
    def beta(self) -> Fraction:
        return Fraction(self.n, self.d)

    @property
    def beta_f(self) -> float:
        return self.n / self.d

    @property
    def growth_exponent(self) -> int:
        """β·d = n, the exponent of the primitive-vector count."""
        return self.n

    @cached_property
    def subsets(self) -> list[tuple[int, ...]]:
        return list(combinations(range(self.n), self.ell))

    @cached_property
    def subset_index(self) -> dict[tuple[int, ...], int]:
        return {S: i for i, S in enumerate(self.subsets)}

    @cached_property
    def chart_slots(self) -> list[tuple[int, int, int, int]]:
        """``(plucker_index, row, col, sign)`` for each chart entry ``A[row][col]``.

        The minor of ``[I | A]`` on the top set with column ``row`` swapped for
        ``ℓ + col`` equals ``(-1)^(ℓ-1-row) A[row][col]``.
        """
        top = list(range(self.ell))
        out = []
        for i in range(self.ell):
            for j in range(self.n - self.ell):
                S = tuple(sorted([t for t in top if t != i] + [self.ell + j]))
                out.append((self.subset_index[S], i, j, (-1) ** (self.ell - 1 - i)))
        return out

    @cached_property
    def chart_mask(self) -> np.ndarray:
        m = np.zeros(self.dim_V, dtype=bool)
        for k, _, _, _ in self.chart_slots:
            m[k] = True
        return m

    def __str__(self) -> str:
        return f"({self.ell},{self.n})"


def parse_model(text: str) -> GrassmannModel:
    try:
        ell, n = (int(t) for t in str(text).split(","))
    except ValueError as exc:
        raise ValidationError(f"model must look like 'ell,n', got {text!r}") from exc
    return GrassmannModel(ell, n)


# --- Plücker algebra ----------------------------------------------------------


def plucker_embed(rows) -> list[int]:
    """Exact ℓ×ℓ minors of an integer ℓ×n matrix of rank ℓ."""
    rows = [[int(x) for x in r] for r in rows]
    if bareiss_rank(rows) != len(rows):
        raise ValidationError("matrix does not have full row rank")
    return plucker_int(rows)


def plucker_real(frame) -> np.ndarray:
    """Minors of a real ℓ×n matrix (or a stack of them)."""
    F = np.asarray(frame, dtype=float)
    ell, n = F.shape[-2], F.shape[-1]
    subsets = np.array(list(combinations(range(n), ell)))
    sub = F[..., :, subsets]  # (..., ℓ, m, ℓ)
    sub = np.moveaxis(sub, -2, -3)  # (..., m, ℓ, ℓ)
    return np.linalg.det(sub)


def _signed(p, model: GrassmannModel, seq: list[int]):
    if len(set(seq)) < len(seq):
        return 0
    perm = sorted(range(len(seq)), key=lambda k: seq[k])
    # parity of the sorting permutation
    sign = 1
    seen = [False] * len(seq)
    for i in range(len(seq)):
        if not seen[i]:
            j, cyc = i, 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                cyc += 1
            if cyc % 2 == 0:
                sign = -sign
    return sign * p[model.subset_index[tuple(sorted(seq))]]


def plucker_relation_values(p, model: GrassmannModel) -> list:
    """Values of all quadratic Plücker relations at ``p`` (exact for ints)."""
    ell, n = model.ell, model.n
    if ell == 1 or ell == n - 1:
        return []
    out = []
    for I in combinations(range(n), ell - 1):
        for J in combinations(range(n), ell + 1):
            total = 0
            for k, j in enumerate(J):
                a = _signed(p, model, list(I) + [j])
                if a == 0:
                    continue
                b = _signed(p, model, [t for t in J if t != j])
                total += (-1) ** k * a * b
            out.append(total)
    return out


def is_decomposable(p, model: GrassmannModel, tol: float = 1e-9) -> bool:
    vals = plucker_relation_values(p, model)
    if not vals:
        return True
    if all(isinstance(v, int) for v in vals):
        return all(v == 0 for v in vals)
    scale = float(np.dot(np.asarray(p, float), np.asarray(p, float))) or 1.0
    return max(abs(float(v)) for v in vals) <= tol * scale


def decomposable_mask(P: np.ndarray, model: GrassmannModel) -> np.ndarray:
    """Vectorized Plücker test for rows of an integer array (exact in int64)."""
    P = np.asarray(P)
    if model.ell == 1 or model.ell == model.n - 1:
        return np.ones(P.shape[0], dtype=bool)
    ok = np.ones(P.shape[0], dtype=bool)
    for I in combinations(range(model.n), model.ell - 1):
        for J in combinations(range(model.n), model.ell + 1):
            total = np.zeros(P.shape[0], dtype=P.dtype)
            for k, j in enumerate(J):
                a = _signed_column(P, model, list(I) + [j])
                if a is None:
                    continue
                b = _signed_column(P, model, [t for t in J if t != j])
                total = total + (-1) ** k * a * b
            ok &= total == 0
    return ok


def _signed_column(P, model, seq):
    if len(set(seq)) < len(seq):
        return None
    unit = np.zeros(model.dim_V, dtype=np.int64)
    idx = model.subset_index[tuple(sorted(seq))]
    unit[idx] = 1
    return _signed(unit, model, seq) * P[:, idx]


@dataclass(frozen=True)
class RationalSubspace:
    basis: tuple[tuple[int, ...], ...]
    plucker: tuple[int, ...]

    @property
    def height(self) -> float:
        return math.sqrt(sum(x * x for x in self.plucker))

    @property
    def height_sq(self) -> int:
        return sum(x * x for x in self.plucker)

    @classmethod
    def from_rows(cls, rows) -> "RationalSubspace":
        rows = [[int(x) for x in r] for r in rows]
        if bareiss_rank(rows) != len(rows):
            raise ValidationError("rows are linearly dependent")
        H = saturate(rows)
        p = plucker_int(H)
        g = vector_gcd(p)
        p = sign_normalize([x // g for x in p])
        return cls(tuple(tuple(r) for r in H), tuple(p))


def height(sub: RationalSubspace) -> float:
    return sub.height


# --- real points and the cone --------------------------------------------------


@dataclass
class FlagPoint:
    model: GrassmannModel
    frame: np.ndarray

    @cached_property
    def plucker(self) -> np.ndarray:
        return plucker_real(self.frame)

    @classmethod
    def from_rows(cls, model: GrassmannModel, rows) -> "FlagPoint":
        M = np.asarray(rows, dtype=float)
        Q, _ = np.linalg.qr(M.T)
        return cls(model, Q.T.copy())


def sample_uniform_point(model: GrassmannModel, gen: np.random.Generator) -> FlagPoint:
    """K-invariant random point: orthonormalized rows of a Gaussian ℓ×n matrix."""
    G = gen.standard_normal((model.ell, model.n))
    Q, R = np.linalg.qr(G.T)
    Q = Q * np.sign(np.diag(R))
    return FlagPoint(model, Q.T.copy())


def rotation_to(x: FlagPoint) -> np.ndarray:
    """An element k of SO(n) with ``k·x0 = x`` (first ℓ columns span x)."""
    ell, n = x.model.ell, x.model.n
    M = np.concatenate([x.frame.T, np.eye(n)], axis=1)
    Q, R = np.linalg.qr(M)
    Q = Q[:, :n] * np.sign(np.where(np.diag(R)[:n] == 0, 1.0, np.diag(R)[:n]))
    Q[:, :ell] = x.frame.T
    # re-orthonormalize the complement against the exact frame
    for j in range(ell, n):
        v = Q[:, j] - Q[:, :j] @ (Q[:, :j].T @ Q[:, j])
        Q[:, j] = v / np.linalg.norm(v)
    if np.linalg.det(Q) < 0:
        Q[:, n - 1] = -Q[:, n - 1]
    return Q


def stabilizer_index(model: GrassmannModel) -> tuple[int, np.ndarray]:
    """``[K∩P : K∩L]`` with a witness in K∩P acting by -1 on e_χ."""
    w = np.eye(model.n)
    w[0, 0] = -1.0
    w[model.n - 1, model.n - 1] = -1.0
    return 2, w


@dataclass
class ConeVector:
    model: GrassmannModel
    plucker: np.ndarray

    @property
    def vplus(self) -> float:
        return float(self.plucker[0])

    @property
    def uminus(self) -> np.ndarray | None:
        try:
            return cone_coords(self.model, self.plucker)[1]
        except OutsideChartError:
            return None


def cone_coords(model: GrassmannModel, p) -> tuple[float, np.ndarray]:
    """``(v⁺, u⁻)``: top coordinate and the chart matrix A with ``[v] = rowspace[I | A]``."""
    p = np.asarray(p.plucker if isinstance(p, ConeVector) else p, dtype=float)
    top = float(p[0])
    if top == 0.0:
        raise OutsideChartError("outside chart: top minor vanishes")
    A = np.zeros((model.ell, model.n - model.ell))
    for k, i, j, s in model.chart_slots:
        A[i, j] = s * p[k] / top
    return top, A


def cone_vector_from_chart(model: GrassmannModel, vplus: float, A) -> ConeVector:
    A = np.asarray(A, dtype=float).reshape(model.ell, model.n - model.ell)
    M = np.concatenate([np.eye(model.ell), A], axis=1)
    return ConeVector(model, vplus * plucker_real(M))


def chart_norm(P: np.ndarray, model: GrassmannModel) -> np.ndarray:
    """Frobenius norm of u⁻ for rows of a Plücker array (inf outside the chart)."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    num = np.sqrt((P[:, model.chart_mask] ** 2).sum(axis=1))
    top = np.abs(P[:, 0])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(top > 0, num / np.where(top > 0, top, 1.0), np.inf)


def distance(p, q) -> float:
    """Projective angle between two Plücker vectors, in [0, π/2]."""
    u = np.asarray(p.plucker if hasattr(p, "plucker") else p, dtype=float)
    w = np.asarray(q.plucker if hasattr(q, "plucker") else q, dtype=float)
    nu, nw = np.linalg.norm(u), np.linalg.norm(w)
    if nu == 0 or nw == 0:
        raise ValidationError("distance undefined for the zero vector")
    u, w = u / nu, w / nw
    if u @ w < 0:
        w = -w
    # chord formula keeps full precision near 0
    return float(2.0 * math.asin(min(1.0, np.linalg.norm(u - w) / 2.0)))


def distance_to_many(x: np.ndarray, P: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    x = x / np.linalg.norm(x)
    P = np.asarray(P, dtype=float)
    Pn = P / np.linalg.norm(P, axis=1, keepdims=True)
    sgn = np.where(Pn @ x < 0, -1.0, 1.0)
    chord = np.linalg.norm(Pn - sgn[:, None] * x[None, :], axis=1)
    return 2.0 * np.arcsin(np.minimum(1.0, chord / 2.0))


def distance_to_base(P: np.ndarray) -> np.ndarray:
    """Distance of each row's line to e_χ."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    rest = np.sqrt((P[:, 1:] ** 2).sum(axis=1))
    return np.arctan2(rest, np.abs(P[:, 0]))


def diag_flow(model: GrassmannModel, y: float) -> tuple[np.ndarray, np.ndarray]:
    """``a(y)`` on R^n and its diagonal action on V (in Plücker order)."""
    if y <= 0:
        raise ValidationError("flow parameter must be positive")
    ell, n = model.ell, model.n
    diag = np.array([y ** (-(n - ell) / n)] * ell + [y ** (ell / n)] * (n - ell))
    on_v = np.array([np.prod(diag[list(S)]) for S in model.subsets])
    return np.diag(diag), on_v


def flow_weights(model: GrassmannModel) -> np.ndarray:
    """Exponent of y on each Plücker coordinate under a(y)."""
    ell, n = model.ell, model.n
    w = np.array([-(n - ell) / n] * ell + [ell / n] * (n - ell))
    return np.array([w[list(S)].sum() for S in model.subsets])


# --- regions -----------------------------------------------------------------


def c_hat(model: GrassmannModel, ell_index: int, C0: float = DEFAULT_C0) -> float:
    b = model.beta_f
    return (1.0 + C0 * ell_index ** (-b)) ** (-(1.0 + b))


@dataclass(frozen=True)
class RegionSpec:
    kind: str
    T: float = math.inf
    c: float = 1.0
    ell_index: int = 1
    beta: float | None = None
    C0: float = DEFAULT_C0
    tau: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("E", "Eplus", "F", "Q"):
            raise ValidationError(f"unknown region kind {self.kind!r}")
        if self.T < 1:
            raise ValidationError("T must be ≥ 1")
        if self.kind == "Q" and self.ell_index < 1:
            raise ValidationError("ℓ index must be ≥ 1")
        if self.c <= 0:
            raise ValidationError("c must be positive")


def region_mask(spec: RegionSpec, model: GrassmannModel, P) -> np.ndarray:
    """Membership of each row of a Plücker array in the region.

    Norm thresholds carry a relative guard of 1e-12 so that integer vectors
    sitting exactly on a boundary are classified as in exact arithmetic even
    after a rotation has perturbed their last bits.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    beta = model.beta_f if spec.beta is None else spec.beta
    shrink = 1.0 - REL_GUARD
    if spec.kind == "Q":
        return np.linalg.norm(P, axis=1) <= spec.C0 * spec.ell_index * (1.0 + REL_GUARD)
    if spec.kind == "E":
        tau = beta if spec.tau is None else spec.tau
        norm = np.linalg.norm(P, axis=1)
        ok = (norm >= shrink) & (norm < spec.T * shrink)
        with np.errstate(divide="ignore"):
            bound = spec.c * norm ** (-tau)
        return ok & (distance_to_base(P) < bound)
    top = np.abs(P[:, 0])
    upper = E if spec.kind == "F" else spec.c * spec.T
    ok = (top >= shrink) & (top < upper * shrink)
    with np.errstate(divide="ignore"):
        bound = spec.c * np.where(top > 0, top, 1.0) ** (-beta)
    return ok & (chart_norm(P, model) < bound)


def region_contains(spec: RegionSpec, v) -> bool:
    model = v.model
    return bool(region_mask(spec, model, v.plucker[None, :])[0])


def cell_index(model: GrassmannModel, c: float, v) -> int | None:
    """The i ≥ 0 with ``a(e^{βi}) v ∈ F_c``, or None if v is not in E⁺."""
    p = np.asarray(v.plucker if isinstance(v, ConeVector) else v, dtype=float)
    top = abs(p[0])
    if top < 1.0 or not chart_norm(p, model)[0] < c * top ** (-model.beta_f):
        return None
    guess = int(math.floor(math.log(top)))
    F = RegionSpec("F", c=c)
    for i in (guess, guess - 1, guess + 1):
        if i < 0:
            continue
        if region_mask(F, model, flow_plucker(model, p, math.exp(model.beta_f * i)))[0]:
            return i
    return None


def cell_hits(model: GrassmannModel, c: float, v, N: int) -> list[int]:
    """All i in [0, N) with ``a(y_i) v ∈ F_c`` (used to test the disjoint union)."""
    p = np.asarray(v.plucker if isinstance(v, ConeVector) else v, dtype=float)
    F = RegionSpec("F", c=c)
    ys = np.exp(model.beta_f * np.arange(N))
    stack = np.stack([flow_plucker(model, p, y) for y in ys]) if N else np.zeros((0, model.dim_V))
    return [int(i) for i in np.nonzero(region_mask(F, model, stack))[0]] if N else []


def flow_plucker(model: GrassmannModel, P, y: float) -> np.ndarray:
    return np.asarray(P, dtype=float) * (y ** flow_weights(model))


# --- random cone vectors and region property checks ------------------------------


def cone_vectors_from_chart(model: GrassmannModel, vplus: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Plücker rows ``v⁺·(I | A)`` for a stack of chart matrices A of shape (m, ℓ, n-ℓ)."""
    A = np.asarray(A, dtype=float).reshape(-1, model.ell, model.n - model.ell)
    eye = np.broadcast_to(np.eye(model.ell), (A.shape[0], model.ell, model.ell))
    return np.asarray(vplus, dtype=float)[:, None] * plucker_real(np.concatenate([eye, A], axis=2))


def _chart_directions(model: GrassmannModel, gen: np.random.Generator, m: int) -> np.ndarray:
    G = gen.standard_normal((m, model.d))
    return G / np.linalg.norm(G, axis=1, keepdims=True)


def random_cone_vectors(model: GrassmannModel, gen: np.random.Generator, m: int,
                        top_range: tuple[float, float], radius_range: tuple[float, float]) -> np.ndarray:
    """Cone vectors with |v⁺| log-uniform in ``top_range`` and ‖u⁻‖ = r·|v⁺|^{-β}, r uniform."""
    lo, hi = top_range
    top = np.exp(gen.uniform(math.log(lo), math.log(hi), m))
    sign = np.where(gen.random(m) < 0.5, -1.0, 1.0)
    r = gen.uniform(radius_range[0], radius_range[1], m)
    A = _chart_directions(model, gen, m) * (r * top ** (-model.beta_f))[:, None]
    return cone_vectors_from_chart(model, sign * top, A)


@dataclass
class SandwichReport:
    ell_index: int
    c_hat: float
    samples: int
    inner_hits: int
    middle_hits: int
    violations: int


def sandwich_violations(model: GrassmannModel, ell_index: int, samples: int, gen: np.random.Generator,
                        T: float = 1e6, C0: float = DEFAULT_C0) -> SandwichReport:
    """Count failures of E⁺_{T,ĉ}∖Q_{2ℓ} ⊆ E(T)∖Q_ℓ ⊆ E⁺_{T,1/ĉ} on random cone vectors.

    Samples concentrate near the region boundaries (|v⁺| from C0ℓ/4 to 2T,
    chart radius up to 3 times the critical scale) so both inclusions are
    genuinely exercised.
    """
    ch = c_hat(model, ell_index, C0)
    P = random_cone_vectors(model, gen, samples, (C0 * ell_index / 4.0, 2.0 * T), (0.0, 3.0))
    inner = region_mask(RegionSpec("Eplus", T=T, c=ch), model, P) & ~region_mask(
        RegionSpec("Q", ell_index=2 * ell_index, C0=C0), model, P)
    middle = region_mask(RegionSpec("E", T=T), model, P) & ~region_mask(
        RegionSpec("Q", ell_index=ell_index, C0=C0), model, P)
    outer = region_mask(RegionSpec("Eplus", T=T, c=1.0 / ch), model, P)
    bad = (inner & ~middle) | (middle & ~outer)
    return SandwichReport(ell_index, ch, samples, int(inner.sum()), int(middle.sum()), int(bad.sum()))


@dataclass
class PartitionReport:
    samples: int
    exactly_one: int
    index_agrees: int


def cell_partition_check(model: GrassmannModel, N: int, samples: int, gen: np.random.Generator,
                         c: float = 1.0) -> PartitionReport:
    """For random v ∈ E⁺_{T,c} with cT = e^N, count those hit by exactly one flow cell."""
    P = random_cone_vectors(model, gen, samples, (1.0, math.exp(N)), (0.0, c))
    P = P[region_mask(RegionSpec("Eplus", T=math.exp(N) / c, c=c), model, P)]
    F = RegionSpec("F", c=c)
    hits = np.stack([region_mask(F, model, flow_plucker(model, P, math.exp(model.beta_f * i)))
                     for i in range(N)], axis=1)
    one = hits.sum(axis=1) == 1
    agree = sum(1 for row, p in zip(hits, P) if row.sum() == 1 and cell_index(model, c, p) == int(np.argmax(row)))
    return PartitionReport(int(P.shape[0]), int(one.sum()), agree)


def distance_estimate_ratios(model: GrassmannModel, scales, samples: int,
                             gen: np.random.Generator) -> list[float]:
    """Max of |d(x₀, [I|A]) - ‖A‖| / ‖A‖² over random chart directions, per ‖A‖ scale."""
    out = []
    base = np.zeros(model.dim_V)
    base[0] = 1.0
    for s in scales:
        A = _chart_directions(model, gen, samples) * s
        P = cone_vectors_from_chart(model, np.ones(samples), A)
        d = distance_to_many(base, P)
        out.append(float(np.max(np.abs(d - s) / s**2)))
    return out


# --- measures ----------------------------------------------------------------


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def zeta(s: float) -> float:
    from scipy.special import zeta as _z

    return float(_z(s, 1))


def measure_normalization(model: GrassmannModel) -> tuple[float, str]:
    """Constant in front of |v⁺|^{βd-1} dv⁺ dA, and whether it is exact."""
    if model.ell == 1 or model.ell == model.n - 1:
        return 1.0 / zeta(model.n), "exact"
    return 1.0, "relative"


def cone_volume_closed_form(model: GrassmannModel, c: float) -> float:
    const, _ = measure_normalization(model)
    return const * 2.0 * unit_ball_volume(model.d) * c ** model.d


def cone_volume_quadrature(model: GrassmannModel, c: float) -> float:
    """λ(F_c) for ℙ¹ by 2-D integration of the region in R²."""
    from scipy.integrate import dblquad

    if (model.ell, model.n) != (1, 2):
        raise ValidationError("quadrature oracle implemented for (1,2) only")
    beta = model.beta_f
    # region: 1 ≤ |p| < e, |q/p| < c |p|^{-β}; both signs of p
    area, _ = dblquad(
        lambda q, p: 1.0,
        1.0,
        E,
        lambda p: -c * p ** (1.0 - beta),
        lambda p: c * p ** (1.0 - beta),
        epsabs=1e-12,
        epsrel=1e-12,
    )
    return 2.0 * area / zeta(2)


def cone_volume_F(model: GrassmannModel, c: float, samples: int, gen: np.random.Generator) -> tuple[float, float]:
    """Monte-Carlo ``(estimate, stderr)`` of λ(F_c) in chart coordinates."""
    const, _ = measure_normalization(model)
    d = model.d
    beta = model.beta_f
    s = gen.uniform(-E, E, samples)
    A = gen.uniform(-c, c, (samples, d))
    top = np.abs(s)
    inside = (top >= 1.0) & (top < E) & (np.linalg.norm(A, axis=1) < c * np.maximum(top, 1e-300) ** (-beta))
    weight = np.where(inside, top ** (beta * d - 1.0), 0.0)
    box = 2 * E * (2 * c) ** d
    vals = const * box * weight
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


# --- rational point enumeration --------------------------------------------------


def _sign_normalize_rows(P: np.ndarray) -> np.ndarray:
    nz = P != 0
    first = np.argmax(nz, axis=1)
    sgn = np.sign(P[np.arange(P.shape[0]), first])
    sgn[sgn == 0] = 1
    return P * sgn[:, None]


def _unique_rows(P: np.ndarray) -> np.ndarray:
    if P.shape[0] == 0:
        return P
    return np.unique(P, axis=0)


def _supported(model: GrassmannModel) -> None:
    ok = (model.ell == 1 and model.n <= 6) or (model.ell == model.n - 1 and model.n <= 6) or (
        (model.ell, model.n) == (2, 4)
    )
    if not ok:
        raise ValidationError(f"rational point enumeration not supported for {model}")


def primitive_vectors_up_to_sign(n: int, T: float) -> np.ndarray:
    Z = _ball_points(n, T)
    Z = Z[primitive_mask(Z)]
    return Z[np.all(_sign_normalize_rows(Z) == Z, axis=1)]


def _planes_24(T: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Primitive Plücker vectors (sign-normalized) of planes in Q^4 with height < T.

    Each plane is reached from a shortest vector v1 (‖v1‖² ≤ γ·T) and a
    primitive vector of the projected lattice Z^4/Zv1 of norm < T/‖v1‖.
    Returns ``(plucker, v1, v2)`` arrays.
    """
    T2 = float(T) ** 2
    V1 = primitive_vectors_up_to_sign(4, math.sqrt(HERMITE_GAMMA2 * T) + 1e-9)
    V1 = V1[(V1 * V1).sum(axis=1) <= HERMITE_GAMMA2 * T + 1e-9]
    out_p, out_a, out_b = [], [], []
    pairs = list(combinations(range(4), 2))
    for v1 in V1:
        a = int(v1 @ v1)
        U = np.array(complete_basis(v1.tolist()), dtype=np.int64)
        rest = U[:, 1:].astype(float)
        u = v1 / math.sqrt(a)
        proj = rest - np.outer(u, u @ rest)
        Z, _ = enumerate_lattice_points(proj, math.sqrt(T2 / a))
        Z = Z[primitive_mask(Z)]
        if Z.shape[0] == 0:
            continue
        V2 = Z @ U[:, 1:].T
        P = np.stack([v1[i] * V2[:, j] - v1[j] * V2[:, i] for i, j in pairs], axis=1)
        h2 = (P * P).sum(axis=1)
        # keep only pairs where v1 is a shortest vector of the plane
        b = V2 @ v1
        q = np.floor_divide(2 * b + a, 2 * a)
        c2 = (V2 * V2).sum(axis=1) - 2 * q * b + q * q * a
        keep = (h2 < T2) & (c2 >= a)
        if keep.any():
            out_p.append(P[keep])
            out_a.append(np.repeat(v1[None, :], keep.sum(), axis=0))
            out_b.append(V2[keep] - q[keep, None] * v1[None, :])
    if not out_p:
        z = np.zeros((0, 6), dtype=np.int64)
        return z, np.zeros((0, 4), dtype=np.int64), np.zeros((0, 4), dtype=np.int64)
    P = _sign_normalize_rows(np.concatenate(out_p))
    A = np.concatenate(out_a)
    B = np.concatenate(out_b)
    _, first = np.unique(P, axis=0, return_index=True)
    first = np.sort(first)
    return P[first], A[first], B[first]


def rational_plucker_array(model: GrassmannModel, T: float) -> np.ndarray:
    """Sign-normalized primitive Plücker vectors of all rational points with height < T."""
    _supported(model)
    if model.ell == 1:
        return primitive_vectors_up_to_sign(model.n, T)
    if model.ell == model.n - 1:
        W = primitive_vectors_up_to_sign(model.n, T)
        return _sign_normalize_rows(W @ _hyperplane_map(model).T)
    return _planes_24(T)[0]


def _hyperplane_map(model: GrassmannModel) -> np.ndarray:
    """Matrix sending a normal vector w to the Plücker vector of w^⊥ (up to sign).

    The minor on the complement of column k is (-1)^k w_k.
    """
    n = model.n
    M = np.zeros((model.dim_V, n), dtype=np.int64)
    for k in range(n):
        M[model.subset_index[tuple(t for t in range(n) if t != k)], k] = (-1) ** k
    return M


def enumerate_rational_points(model: GrassmannModel, T: float) -> list[RationalSubspace]:
    """Every rational point of height < T once, sorted by (height², Plücker)."""
    _supported(model)
    if model.ell == 1:
        P = primitive_vectors_up_to_sign(model.n, T)
        subs = [RationalSubspace((tuple(p),), tuple(p)) for p in P.tolist()]
    elif model.ell == model.n - 1:
        W = primitive_vectors_up_to_sign(model.n, T)
        subs = []
        for w in W.tolist():
            K = hnf(integer_kernel([w], model.n))
            p = plucker_int(K)
            subs.append(RationalSubspace(tuple(tuple(r) for r in K), tuple(sign_normalize(p))))
    else:
        P, A, B = _planes_24(T)
        subs = []
        for p, a, b in zip(P.tolist(), A.tolist(), B.tolist()):
            subs.append(RationalSubspace(tuple(tuple(r) for r in hnf([a, b])), tuple(p)))
    subs.sort(key=lambda s: (s.height_sq, s.plucker))
    return subs
