"""Primitive Siegel transforms: pointwise evaluation and Monte-Carlo laws on SL2."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from . import rng as _rng
from .errors import ValidationError
from .flag import (
    GrassmannModel,
    RegionSpec,
    decomposable_mask,
    region_mask,
    rotation_to,
    stabilizer_index,
    zeta,
)
from .lattice import (
    UnimodularLattice,
    _ball_points,
    compound_matrix,
    enumerate_lattice_points,
    gauss_reduce_batch,
    haar_bases,
    haar_block,
    primitive_mask,
    shortest_vector,
    sl2_primitive_points,
)

_KINDS = ("ball_indicator", "annulus_indicator", "radial_smooth_bump", "gaussian", "zero", "region")


@dataclass(frozen=True)
class TestFunction:
    """Bounded test function on R^dim.

    Radial kinds take ``params``: ball ``(r,)``, annulus ``(r1, r2)``, bump
    ``(r,)``, gaussian ``(s,)``. The ``region`` kind is the indicator of a
    :class:`RegionSpec` on the Plücker cone of ``model``.
    """

    __test__ = False  # not a pytest class

    kind: str
    params: tuple[float, ...] = ()
    dim: int = 2
    model: GrassmannModel | None = None
    region: RegionSpec | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown test function kind {self.kind!r}")
        need = {"ball_indicator": 1, "annulus_indicator": 2, "radial_smooth_bump": 1, "gaussian": 1}
        if self.kind in need and len(self.params) != need[self.kind]:
            raise ValidationError(f"{self.kind} needs {need[self.kind]} parameter(s)")
        if self.kind == "annulus_indicator" and not 0 <= self.params[0] < self.params[1]:
            raise ValidationError("annulus needs 0 ≤ r1 < r2")
        if self.kind in ("ball_indicator", "radial_smooth_bump", "gaussian") and self.params[0] <= 0:
            raise ValidationError("radius must be positive")
        if self.kind == "region" and (self.model is None or self.region is None):
            raise ValidationError("region test functions need a model and a RegionSpec")

    @property
    def radial(self) -> bool:
        return self.kind not in ("region",)

    @property
    def support_radius(self) -> float:
        k = self.kind
        if k == "zero":
            return 0.0
        if k in ("ball_indicator", "radial_smooth_bump"):
            return float(self.params[0])
        if k == "annulus_indicator":
            return float(self.params[1])
        if k == "gaussian":
            # exp(-r²/s²) < 1e-17 beyond this radius
            return float(self.params[0]) * math.sqrt(40.0)
        spec = self.region
        if spec.kind == "F":
            return math.e * math.sqrt(1.0 + spec.c**2)
        if spec.kind == "Eplus":
            return spec.c * spec.T * math.sqrt(1.0 + spec.c**2)
        if spec.kind == "E":
            return spec.T
        return spec.C0 * spec.ell_index

    def radial_profile(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        k = self.kind
        if k == "zero":
            return np.zeros_like(r)
        if k == "ball_indicator":
            return (r < self.params[0]).astype(float)
        if k == "annulus_indicator":
            return ((r >= self.params[0]) & (r < self.params[1])).astype(float)
        if k == "gaussian":
            return np.exp(-((r / self.params[0]) ** 2))
        if k == "radial_smooth_bump":
            t = r / self.params[0]
            out = np.zeros_like(t)
            inside = t < 1.0
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
            return out
        raise ValidationError("not a radial test function")

    def __call__(self, points) -> np.ndarray:
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if self.radial:
            return self.radial_profile(np.linalg.norm(P, axis=1))
        return region_mask(self.region, self.model, P).astype(float)

    def integral(self) -> float:
        """Lebesgue integral over R^dim (radial kinds)."""
        if not self.radial:
            raise ValidationError("integral defined for radial test functions only")
        k = self.kind
        sphere = self.dim * math.pi ** (self.dim / 2) / math.gamma(self.dim / 2 + 1)
        if k == "zero":
            return 0.0
        if k == "ball_indicator":
            return sphere / self.dim * self.params[0] ** self.dim
        if k == "annulus_indicator":
            r1, r2 = self.params
            return sphere / self.dim * (r2**self.dim - r1**self.dim)
        val, _ = quad(lambda r: float(self.radial_profile(np.array([r]))[0]) * r ** (self.dim - 1),
                      0.0, self.support_radius, epsabs=1e-13, epsrel=1e-12, limit=200)
        return sphere * val


def parse_test_function(text: str) -> TestFunction:
    """``annulus:1,2`` / ``ball:1`` / ``bump:1`` / ``gaussian:0.5`` / ``zero``."""
    name, _, rest = str(text).partition(":")
    kinds = {"annulus": "annulus_indicator", "ball": "ball_indicator", "bump": "radial_smooth_bump",
             "gaussian": "gaussian", "zero": "zero"}
    if name not in kinds:
        raise ValidationError(f"unknown test function {text!r}")
    try:
        params = tuple(float(t) for t in rest.split(",")) if rest else ()
    except ValueError as exc:
        raise ValidationError(f"bad parameters in {text!r}") from exc
    return TestFunction(kinds[name], params)


@dataclass
class SiegelEvaluation:
    value: float
    terms: int
    cutoff_radius: float
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)), repr=False)


def siegel_eval(f: TestFunction, lattice, model: GrassmannModel | None = None) -> SiegelEvaluation:
    """Σ f over the primitive points of ``lattice`` (decomposable ones when ``model`` has ℓ ≥ 2).

    ``lattice`` is a :class:`UnimodularLattice` or a square basis matrix
    (columns), acting on the standard integer lattice of the same dimension.
    """
    B = lattice.basis if isinstance(lattice, UnimodularLattice) else np.asarray(lattice, dtype=float)
    R = f.support_radius
    if R <= 0:
        return SiegelEvaluation(0.0, 0, R, np.zeros((0, B.shape[0])))
    Z, P = enumerate_lattice_points(B, R)
    keep = primitive_mask(Z)
    if model is not None and 1 < model.ell < model.n - 1:
        keep &= decomposable_mask(Z, model)
    Z, P = Z[keep], P[keep]
    inside = np.linalg.norm(P, axis=1) < R * (1.0 + 1e-12)
    P = P[inside]
    vals = f(P) if P.shape[0] else np.zeros(0)
    return SiegelEvaluation(float(math.fsum(vals.tolist())), int(P.shape[0]), R, P)


# --- SL2 Monte Carlo --------------------------------------------------------------


def siegel_values_sl2(f: TestFunction, bases: np.ndarray) -> np.ndarray:
    """S f on a stack of 2×2 bases, vectorized."""
    m = bases.shape[0]
    R = f.support_radius
    if R <= 0:
        return np.zeros(m)
    b1, b2 = gauss_reduce_batch(bases)
    owner, pts, _ = sl2_primitive_points(b1, b2, R)
    vals = f(pts) if pts.shape[0] else np.zeros(0)
    return np.bincount(owner, weights=vals, minlength=m)


def _block_stats(args) -> tuple[float, float, int]:
    f, seed, block, size = args
    x, y, theta = haar_block(seed, block, size)
    v = siegel_values_sl2(f, haar_bases(x, y, theta))
    return math.fsum(v.tolist()), math.fsum((v * v).tolist()), size


@dataclass
class MeanValueResult:
    estimate: float
    stderr: float
    predicted: float
    samples: int

    @property
    def z_score(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.estimate == self.predicted else math.inf
        return (self.estimate - self.predicted) / self.stderr


def predicted_mean(f: TestFunction, zeta2: float | None = None) -> float:
    z2 = zeta(2) if zeta2 is None else zeta2
    return f.integral() / z2


def mean_value_mc(f: TestFunction, samples: int, seed: int, workers: int | None = None,
                  zeta2: float | None = None) -> MeanValueResult:
    """Average of S f over exact Haar samples, against ∫f / ζ(2)."""
    if f.dim != 2:
        raise ValidationError("Monte-Carlo mean values are available for n = 2 only")
    sizes = _rng.block_sizes(samples)
    parts = _rng.run_blocks(_BlockJob(f, seed, tuple(sizes)), len(sizes), workers)
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0) * samples / max(samples - 1, 1)
    return MeanValueResult(mean, math.sqrt(var / samples), predicted_mean(f, zeta2), samples)


@dataclass(frozen=True)
class _BlockJob:
    f: TestFunction
    seed: int
    sizes: tuple

    def __call__(self, b: int):
        return _block_stats((self.f, self.seed, b, self.sizes[b]))


def cusp_probabilities(deltas, samples: int, seed: int, workers: int | None = None) -> dict[float, float]:
    """Empirical P(λ₁ < δ) over Haar samples (λ₁ = y^{-1/2} in the fundamental domain)."""
    sizes = _rng.block_sizes(samples)
    deltas = [float(d) for d in deltas]
    parts = _rng.run_blocks(_CuspJob(seed, tuple(deltas), tuple(sizes)), len(sizes), workers)
    totals = np.sum(np.array(parts, dtype=np.int64), axis=0)
    return {d: int(t) / samples for d, t in zip(deltas, totals)}


@dataclass(frozen=True)
class _CuspJob:
    seed: int
    deltas: tuple
    sizes: tuple

    def __call__(self, b: int):
        x, y, theta = haar_block(self.seed, b, self.sizes[b])
        lam = 1.0 / np.sqrt(y)
        return [int((lam < d).sum()) for d in self.deltas]


def predicted_cusp_probability(delta: float) -> float:
    return 3.0 / math.pi * delta * delta


@dataclass
class SupBound:
    sup_observed: float
    sup_first_half: float
    constant_fit: float
    linf_flag: bool


def sup_bound_probe(f: TestFunction, samples: int, seed: int) -> SupBound:
    """Largest S f seen over Haar samples and the fitted constant in S f ≤ C·λ₁^{-2}."""
    vals, lams = [], []
    for _, x, y, theta in _haar_iter(seed, samples):
        vals.append(siegel_values_sl2(f, haar_bases(x, y, theta)))
        lams.append(1.0 / np.sqrt(y))
    v = np.concatenate(vals)
    lam = np.concatenate(lams)
    half = v[: samples // 2]
    return SupBound(float(v.max()), float(half.max()), float((v * lam**2).max()), bool(np.isfinite(v.max())))


def _haar_iter(seed, samples):
    from .lattice import haar_samples

    return haar_samples(seed, samples)


def truncated_siegel(f: TestFunction, lattice, delta: float, xi: float = 1.0) -> float:
    """Hard-cutoff truncation: S f if λ₁ ≥ ξδ, else 0."""
    if not 0 < delta < 1:
        raise ValidationError("delta must lie in (0, 1)")
    L = lattice if isinstance(lattice, UnimodularLattice) else UnimodularLattice(lattice, renormalize=False)
    lam = shortest_vector(L)[1]
    if lam < xi * delta:
        return 0.0
    return siegel_eval(f, L).value


def truncation_gap_mc(f: TestFunction, deltas, samples: int, seed: int) -> dict[float, float]:
    """E[S f] − E[S^{(δ)} f] = E[S f · 1{λ₁ < δ}] for each δ."""
    sums = {float(d): 0.0 for d in deltas}
    for _, x, y, theta in _haar_iter(seed, samples):
        v = siegel_values_sl2(f, haar_bases(x, y, theta))
        lam = 1.0 / np.sqrt(y)
        for d in sums:
            sums[d] += float(v[lam < d].sum())
    return {d: s / samples for d, s in sums.items()}


# --- the reduction to a lattice-point count ------------------------------------------


@lru_cache(maxsize=8)
def primitive_cone_points(model: GrassmannModel, T: float) -> np.ndarray:
    """All primitive decomposable integer vectors of V with norm < T (brute force)."""
    a_max = int(math.floor(T))
    if a_max * a_max >= T * T:
        a_max -= 1
    chunks = []
    for a in range(-a_max, a_max + 1):
        Z = _ball_points(model.dim_V, T, np.array([[a]], dtype=np.int64))
        Z = Z[primitive_mask(Z)]
        if 1 < model.ell < model.n - 1:
            Z = Z[decomposable_mask(Z, model)]
        chunks.append(Z)
    return np.concatenate(chunks)


@dataclass
class ReductionCheck:
    lhs: int
    rhs: int
    region_points: int
    index: int

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs


def reduction_identity_check(x, T: float, model: GrassmannModel, c: float = 1.0,
                             tau: float | None = None) -> ReductionCheck:
    """Direct approximation count versus the index-weighted region count."""
    from .count import CountQuery, count_approximations

    tau = model.beta_f if tau is None else tau
    lhs = count_approximations(CountQuery(model, x, c, tau, T))
    index, _ = stabilizer_index(model)
    k = rotation_to(x)
    kinv_v = compound_matrix(k.T, model.ell)
    P = primitive_cone_points(model, float(T)).astype(float) @ kinv_v.T
    spec = RegionSpec("E", T=T, c=c, tau=tau)
    hits = int(region_mask(spec, model, P).sum())
    if hits % index:
        raise ValidationError(f"region count {hits} is not divisible by the index {index}")
    return ReductionCheck(lhs, hits // index, hits, index)
