"""Expanding K-orbit averages on SL2(R)/SL2(Z).

The orbit {a(y)·Rot(θ)·Λ : θ ∈ [0, π)} is integrated with the periodic
trapezoidal rule, doubling the node count until two successive estimates
agree to the requested tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import rng as _rng
from .errors import ValidationError
from .lattice import haar_bases, haar_block, modular_draws
from .siegel import TestFunction, predicted_mean, siegel_values_sl2

MIN_QUAD_POINTS = 2**10
MAX_QUAD_POINTS = 2**22
_CHUNK = 2**16
BASES_STREAM = "equidist-bases"


@dataclass(frozen=True)
class Observable:
    """Bounded continuous function on the space of unimodular planar lattices.

    ``smooth_cusp_height`` is the primitive Siegel transform of the Gaussian
    exp(-|v|²/s²): near the cusp it tends to 2 (only ±shortest vector
    survives), in the bulk it is small. ``smooth_ball_count`` is the Siegel
    transform of a C^∞ bump of radius s.
    """

    kind: str
    smoothing_scale: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in ("smooth_cusp_height", "smooth_ball_count", "constant"):
            raise ValidationError(f"unknown observable {self.kind!r}")
        if self.smoothing_scale <= 0:
            raise ValidationError("smoothing scale must be positive")

    @property
    def test_function(self) -> TestFunction | None:
        if self.kind == "smooth_cusp_height":
            return TestFunction("gaussian", (self.smoothing_scale,))
        if self.kind == "smooth_ball_count":
            return TestFunction("radial_smooth_bump", (self.smoothing_scale,))
        return None

    def __call__(self, bases: np.ndarray) -> np.ndarray:
        bases = np.asarray(bases, dtype=float)
        if bases.ndim == 2:
            bases = bases[None]
        if self.kind == "constant":
            return np.ones(bases.shape[0])
        return siegel_values_sl2(self.test_function, bases)

    def haar_mean(self) -> float:
        """Exact Haar average via the mean value formula (∫f / ζ(2))."""
        if self.kind == "constant":
            return 1.0
        return predicted_mean(self.test_function)


def parse_observable(text: str) -> Observable:
    """``cusp:0.5`` / ``ball:1`` / ``constant``."""
    name, _, rest = str(text).partition(":")
    kinds = {"cusp": "smooth_cusp_height", "ball": "smooth_ball_count", "constant": "constant"}
    if name not in kinds:
        raise ValidationError(f"unknown observable {text!r}")
    try:
        scale = float(rest) if rest else 0.5
    except ValueError as exc:
        raise ValidationError(f"bad smoothing scale in {text!r}") from exc
    return Observable(kinds[name], scale)


def haar_mean_mc(phi: Observable, samples: int, seed: int) -> tuple[float, float]:
    """Monte-Carlo Haar mean and its standard error."""
    vals = []
    for b, size in enumerate(_rng.block_sizes(samples)):
        x, y, theta = haar_block(seed, b, size)
        vals.append(phi(haar_bases(x, y, theta)))
    v = np.concatenate(vals)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def orbit_bases(y: float, thetas: np.ndarray, base: np.ndarray) -> np.ndarray:
    """Stack of ``a(y)·Rot(θ)·base``."""
    c, s = np.cos(thetas), np.sin(thetas)
    rot = np.empty(thetas.shape + (2, 2))
    rot[:, 0, 0], rot[:, 0, 1], rot[:, 1, 0], rot[:, 1, 1] = c, -s, s, c
    a = np.array([y**-0.5, y**0.5])
    return a[None, :, None] * (rot @ np.asarray(base, dtype=float))


def _density(thetas: np.ndarray, fourier: Sequence[tuple[float, float]] | None) -> np.ndarray:
    """1 + Σ_k a_k cos(2kθ) + b_k sin(2kθ); integrates to 1 over K."""
    out = np.ones_like(thetas)
    for k, (a, b) in enumerate(fourier or (), start=1):
        out += a * np.cos(2 * k * thetas) + b * np.sin(2 * k * thetas)
    return out


@dataclass
class QuadratureResult:
    value: float
    nodes: int
    converged: bool
    last_change: float


def _refine(integrand, quad_points: int, tol: float, max_points: int) -> QuadratureResult:
    """Periodic trapezoidal rule on [0, π), doubling the node count."""
    if quad_points < MIN_QUAD_POINTS:
        raise ValidationError(f"quad_points must be ≥ {MIN_QUAD_POINTS}")

    def node_sum(N: int, offset: float) -> float:
        total = []
        for start in range(0, N, _CHUNK):
            k = np.arange(start, min(N, start + _CHUNK))
            th = np.pi * (k + offset) / N
            total.append(math.fsum(integrand(th).tolist()))
        return math.fsum(total)

    N = int(quad_points)
    value = node_sum(N, 0.0) / N
    change = math.inf
    while N < max_points:
        mid = node_sum(N, 0.5) / N
        new = 0.5 * (value + mid)
        change = abs(new - value)
        value, N = new, 2 * N
        if change < tol:
            return QuadratureResult(value, N, True, change)
    return QuadratureResult(value, N, False, change)


def k_orbit_average(phi: Observable, y: float, base, quad_points: int = MIN_QUAD_POINTS,
                    tol: float = 1e-6, fourier=None, max_points: int = MAX_QUAD_POINTS) -> QuadratureResult:
    """∫_K f(k) φ(a(y) k Λ) dk for the lattice with column basis ``base``."""
    if y < 1:
        raise ValidationError("y must be ≥ 1")
    base = np.asarray(base, dtype=float)

    def integrand(th):
        return _density(th, fourier) * phi(orbit_bases(y, th, base))

    return _refine(integrand, quad_points, tol, max_points)


def double_correlation(phi1: Observable, phi2: Observable, y1: float, y2: float, base1, base2,
                       quad_points: int = MIN_QUAD_POINTS, tol: float = 1e-6,
                       max_points: int = MAX_QUAD_POINTS) -> tuple[QuadratureResult, float]:
    """∫_K φ₁(a(y₁)kΛ₁) φ₂(a(y₂)kΛ₂) dk and the product-of-means target."""
    if not 1 <= y1 <= y2:
        raise ValidationError("need 1 ≤ y1 ≤ y2")
    b1 = np.asarray(base1, dtype=float)
    b2 = np.asarray(base2, dtype=float)

    def integrand(th):
        return phi1(orbit_bases(y1, th, b1)) * phi2(orbit_bases(y2, th, b2))

    res = _refine(integrand, quad_points, tol, max_points)
    return res, phi1.haar_mean() * phi2.haar_mean()


def sample_compact_bases(seed: int, count: int, y_max: float = 2.0) -> list[np.ndarray]:
    """Haar lattices conditioned on the fundamental-domain height y ≤ y_max."""
    gen = _rng.generator(seed, BASES_STREAM, 0)
    out: list[np.ndarray] = []
    while len(out) < count:
        x, y, theta = modular_draws(gen, 4 * count)
        keep = y <= y_max
        for b in haar_bases(x[keep], y[keep], theta[keep]):
            if len(out) < count:
                out.append(b)
    return out


def parse_y_grid(text: str) -> list[float]:
    """``4:4096:geom6`` (6 geometric points) or a comma list."""
    try:
        if ":" in text:
            a, b, spec = text.split(":")
            if not spec.startswith("geom"):
                raise ValueError
            k = int(spec[4:])
            lo, hi = float(a), float(b)
            if k < 2 or not 1 <= lo < hi:
                raise ValueError
            return np.geomspace(lo, hi, k).tolist()
        return [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise ValidationError(f"bad y grid {text!r}") from exc


@dataclass
class DecayCurve:
    ys: list[float]
    errors: list[float]
    median_errors: list[float]
    per_base: np.ndarray = field(repr=False)
    fitted_exponent: float
    target: float


def decay_probe(phi: Observable, bases: Sequence[np.ndarray], y_grid: Sequence[float],
                quad_points: int = MIN_QUAD_POINTS, tol: float = 1e-6, target: float | None = None) -> DecayCurve:
    """Orbit-average errors against the Haar mean over a geometric y grid."""
    ys = [float(y) for y in y_grid]
    if len(ys) < 5:
        raise ValidationError("y grid needs at least 5 points")
    if any(b <= a for a, b in zip(ys, ys[1:])):
        raise ValidationError("y grid must be strictly increasing")
    mu = phi.haar_mean() if target is None else target
    per_base = np.array([[abs(k_orbit_average(phi, y, b, quad_points, tol).value - mu) for y in ys]
                         for b in bases])
    errors = per_base.max(axis=0)
    med = np.median(per_base, axis=0)
    positive = errors > 0
    if positive.sum() >= 2:
        slope = float(np.polyfit(np.log(np.asarray(ys)[positive]), np.log(errors[positive]), 1)[0])
    else:
        slope = float("nan")
    return DecayCurve(ys, errors.tolist(), med.tolist(), per_base, slope, mu)
