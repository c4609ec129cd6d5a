"""Counting rational approximations at the critical exponent."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import stats

from . import rng as _rng
from .errors import ValidationError
from .flag import (
    FlagPoint,
    GrassmannModel,
    RegionSpec,
    c_hat,
    decomposable_mask,
    cone_volume_closed_form,
    cone_volume_quadrature,
    distance_to_many,
    flow_plucker,
    measure_normalization,
    rational_plucker_array,
    region_mask,
    rotation_to,
    sample_uniform_point,
    stabilizer_index,
)
from .lattice import compound_matrix, enumerate_lattice_points, primitive_mask

ENSEMBLE_STREAM = "count-ensemble"
# below this angle bound the shell is mapped to a round ball before enumerating
_SHELL_FLOW_ANGLE = 1.2


@dataclass
class CountQuery:
    model: GrassmannModel
    x: FlagPoint
    c: float
    tau: float
    T: float

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise ValidationError("c must be positive")
        if self.tau < 0 or self.tau > self.model.beta_f + 1 + 1e-12:
            raise ValidationError("tau must lie in [0, β + 1]")
        if not (1 <= self.T < math.inf):
            raise ValidationError("T must be finite and ≥ 1")


@lru_cache(maxsize=4)
def _heights_and_lines(model: GrassmannModel, T: float) -> tuple[np.ndarray, np.ndarray]:
    P = rational_plucker_array(model, T)
    h = np.sqrt((P.astype(float) ** 2).sum(axis=1))
    return P.astype(float), h


def approximation_heights(model: GrassmannModel, x: FlagPoint, c: float, tau: float, T: float,
                          method: str = "enumerate") -> np.ndarray:
    """Sorted heights of the rational points counted in N(x, T)."""
    if method == "enumerate":
        P, h = _heights_and_lines(model, float(T))
        if P.shape[0] == 0:
            return np.zeros(0)
        d = distance_to_many(x.plucker, P)
        ok = (h >= 1.0) & (h < T) & (d < c * h ** (-tau))
        return np.sort(h[ok])
    if method == "shell":
        return _shell_heights(model, x, c, tau, T)
    raise ValidationError(f"unknown counting method {method!r}")


def count_approximations(q: CountQuery, method: str = "enumerate") -> int:
    return int(approximation_heights(q.model, q.x, q.c, q.tau, q.T, method).size)


def counts_on_grid(model, x, c, tau, T_grid, method="shell") -> list[int]:
    h = approximation_heights(model, x, c, tau, max(T_grid), method)
    return [int(np.searchsorted(h, T, side="left")) for T in T_grid]


def _shell_heights(model: GrassmannModel, x: FlagPoint, c: float, tau: float, T: float) -> np.ndarray:
    """Exact count for ℓ = 1 by logarithmic shells.

    Shell j holds e^j ≤ ‖v‖ < e^{j+1}. Inside it the admissible lines lie in a
    thin cone of angle θ_j = c·e^{-jτ} around x; rotating x to e₁ and squeezing
    by diag(s₁, s₂, …) turns that cone into a set of radius O(1), which is
    then enumerated and filtered with the exact predicate.
    """
    if model.ell != 1:
        raise ValidationError("the shell method is implemented for projective spaces (ℓ = 1)")
    n = model.n
    xv = np.asarray(x.plucker, dtype=float)
    xv = xv / np.linalg.norm(xv)
    k = rotation_to(x)
    found = []
    j = 0
    T2 = float(T) * float(T)
    while math.exp(j) < T:
        inner, outer = math.exp(j), min(math.exp(j + 1), float(T))
        theta = c * inner ** (-tau)
        if theta >= _SHELL_FLOW_ANGLE:
            basis = np.eye(n)
            radius = outer
        else:
            rho = outer * math.sin(theta)
            s2 = (outer / rho) ** (1.0 / n)
            s1 = s2 ** (-(n - 1))
            basis = np.diag([s1] + [s2] * (n - 1)) @ k.T
            radius = math.sqrt((outer * s1) ** 2 + (rho * s2) ** 2)
        Z, _ = enumerate_lattice_points(basis, radius)
        Z = Z[primitive_mask(Z)]
        if Z.shape[0]:
            nz = Z != 0
            first = Z[np.arange(Z.shape[0]), np.argmax(nz, axis=1)]
            Z = Z[first > 0]
            sq = (Z.astype(float) ** 2).sum(axis=1)
            norms = np.sqrt(sq)
            in_shell = (norms >= inner) & (norms < math.exp(j + 1)) & (sq < T2)
            Z, norms = Z[in_shell], norms[in_shell]
            if Z.shape[0]:
                d = distance_to_many(xv, Z.astype(float))
                found.append(norms[d < c * norms ** (-tau)])
        j += 1
    return np.sort(np.concatenate(found)) if found else np.zeros(0)


# --- Birkhoff sums over the cell decomposition -------------------------------------


@dataclass
class BirkhoffResult:
    total: int
    per_cell: list[int]
    direct: int
    direct_per_cell: list[int]

    @property
    def equal(self) -> bool:
        return self.total == self.direct


def birkhoff_count(model: GrassmannModel, x: FlagPoint, c: float, N: int) -> BirkhoffResult:
    """Σ_{i<N} S 1_{F_c}(a(y_i) k_x^{-1} Z^n) against a direct count in E⁺_{T,c}, cT = e^N."""
    from .siegel import TestFunction, siegel_eval

    if model.ell != 1 or model.n not in (2, 3):
        raise ValidationError("birkhoff_count supports the models (1,2) and (1,3)")
    if N < 0:
        raise ValidationError("N must be ≥ 0")
    kinv = rotation_to(x).T
    beta = model.beta_f
    F = TestFunction("region", dim=model.n, model=model, region=RegionSpec("F", c=c))
    per_cell = []
    for i in range(N):
        a = np.diag(flow_plucker(model, np.ones(model.n), math.exp(beta * i)))
        per_cell.append(int(siegel_eval(F, a @ kinv, model).value))
    direct, direct_cells = direct_region_count(model, x, c, N)
    return BirkhoffResult(sum(per_cell), per_cell, direct, direct_cells)


def direct_region_count(model: GrassmannModel, x: FlagPoint, c: float, N: int) -> tuple[int, list[int]]:
    """#(k_x^{-1} P ∩ E⁺_{T,c}) with cT = e^N, and its split by floor(ln|v⁺|)."""
    if N == 0:
        return 0, []
    T = math.exp(N) / c
    kinv = rotation_to(x).T
    # E⁺ sits in the cylinder |v⁺| < e^N, ‖v⁻‖ < c·max(1, e^{N(1-β)}); squeeze it into the ball of radius √2
    top = math.exp(N)
    side = c * max(1.0, math.exp(N * (1.0 - model.beta_f)))
    squeeze = np.diag([1.0 / top] + [1.0 / side] * (model.n - 1))
    Z, _ = enumerate_lattice_points(squeeze @ kinv, math.sqrt(2.0))
    Z = Z[primitive_mask(Z)]
    P = Z @ kinv.T
    inside = region_mask(RegionSpec("Eplus", T=T, c=c), model, P)
    top = np.abs(P[inside, 0])
    cells = np.floor(np.log(top)).astype(int)
    return int(inside.sum()), [int((cells == i).sum()) for i in range(N)]


# --- fits and the volume oracle ----------------------------------------------------


@dataclass
class SlopeFit:
    points: list[tuple[float, float]]
    slope: float
    intercept: float
    r2: float
    stderr: float = 0.0


def slope_fit(lnT, N) -> SlopeFit:
    lnT = np.asarray(lnT, dtype=float)
    N = np.asarray(N, dtype=float)
    if lnT.size < 4:
        raise ValidationError("need at least 4 grid points")
    if np.any(np.diff(lnT) <= 0):
        raise ValidationError("the T grid must be increasing")
    res = stats.linregress(lnT, N)
    r2 = float(res.rvalue**2) if np.ptp(N) > 0 else 0.0
    return SlopeFit(list(zip(lnT.tolist(), N.tolist())), float(res.slope), float(res.intercept),
                    min(max(r2, 0.0), 1.0), float(res.stderr))


def ensemble_member(model: GrassmannModel, seed: int, member: int) -> FlagPoint:
    return sample_uniform_point(model, _rng.generator(seed, ENSEMBLE_STREAM, member))


@dataclass(frozen=True)
class _MemberJob:
    model: GrassmannModel
    c: float
    tau: float
    T_grid: tuple
    seed: int

    def __call__(self, member: int) -> list[int]:
        x = ensemble_member(self.model, self.seed, member)
        return counts_on_grid(self.model, x, self.c, self.tau, self.T_grid, "shell")


def ensemble_counts(model: GrassmannModel, c: float, tau: float, T_grid, members: int, seed: int,
                    workers: int | None = None) -> np.ndarray:
    """Counts N(x_m, T) for ensemble members m (rows) on the T grid (columns)."""
    job = _MemberJob(model, float(c), float(tau), tuple(float(t) for t in T_grid), int(seed))
    return np.array(_rng.run_blocks(job, members, workers), dtype=np.int64)


def ensemble_slope(model, c, tau, T_grid, members, seed, workers=None) -> tuple[SlopeFit, np.ndarray]:
    counts = ensemble_counts(model, c, tau, T_grid, members, seed, workers)
    mean = counts.mean(axis=0)
    return slope_fit(np.log(np.asarray(T_grid, dtype=float)), mean), counts


@dataclass
class KappaOracle:
    value: float
    normalization: str
    method: str


def kappa_oracle(model: GrassmannModel, c: float = 1.0) -> KappaOracle:
    """Main-term coefficient: λ(F_c) divided by the stabilizer index."""
    index, _ = stabilizer_index(model)
    norm = measure_normalization(model)[1]
    if (model.ell, model.n) == (1, 2):
        return KappaOracle(cone_volume_quadrature(model, c) / index, norm, "quadrature")
    return KappaOracle(cone_volume_closed_form(model, c) / index, norm, "closed-form")


def parse_T_grid(text: str) -> list[float]:
    """``e4:e12:9`` (9 points, log-spaced) or a comma list such as ``100,200``."""
    def val(tok: str) -> float:
        tok = tok.strip()
        return math.exp(float(tok[1:])) if tok.startswith("e") else float(tok)

    try:
        if ":" in text:
            a, b, k = text.split(":")
            lo, hi, k = val(a), val(b), int(k)
            if k < 2 or hi <= lo:
                raise ValueError
            return np.exp(np.linspace(math.log(lo), math.log(hi), k)).tolist()
        return [val(t) for t in text.split(",")]
    except ValueError as exc:
        raise ValidationError(f"bad T grid {text!r}") from exc


# --- sandwich bounds on actual counts ----------------------------------------------


@dataclass
class SandwichCount:
    lower: int
    middle: int
    upper: int
    slack: float

    @property
    def holds(self) -> bool:
        return self.lower - self.slack <= self.middle <= self.upper + self.slack


def sandwich_count_check(model: GrassmannModel, x: FlagPoint, T: float, ell_index: int,
                         C0: float = 8.0) -> SandwichCount:
    """Counts of k_x^{-1}P in E⁺_{T,ĉ}, E_β(T) and E⁺_{T,1/ĉ} with slack C0·ℓ^{βd}."""
    ch = c_hat(model, ell_index, C0)
    kinv = compound_matrix(rotation_to(x).T, model.ell)
    radius = T * math.sqrt(1.0 + (1.0 / ch) ** 2) / ch
    Z, P = enumerate_lattice_points(kinv, radius)
    keep = primitive_mask(Z) & decomposable_mask(Z, model)
    P = P[keep]
    lower = int(region_mask(RegionSpec("Eplus", T=T, c=ch), model, P).sum())
    middle = int(region_mask(RegionSpec("E", T=T), model, P).sum())
    upper = int(region_mask(RegionSpec("Eplus", T=T, c=1.0 / ch), model, P).sum())
    return SandwichCount(lower, middle, upper, C0 * ell_index ** model.growth_exponent)
