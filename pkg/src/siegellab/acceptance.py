"""The acceptance suite: one function per criterion, each returning a verdict.

Every check runs at its stated tolerance. ``quick=True`` shrinks sample
counts and loosens statistical tolerances accordingly, for smoke runs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import rng as _rng
from .count import (
    birkhoff_count,
    ensemble_slope,
    kappa_oracle,
    parse_T_grid,
)
from .equidist import Observable, double_correlation, k_orbit_average, sample_compact_bases
from .flag import (
    cell_partition_check,
    distance_estimate_ratios,
    parse_model,
    rational_plucker_array,
    sample_uniform_point,
    sandwich_violations,
)
from .rootsys import (
    is_l1_integrable,
    is_linf_integrable,
    l2_necessary_full_test,
    l2_necessary_neighbor_test,
    parabolic,
)
from .siegel import TestFunction, cusp_probabilities, mean_value_mc, predicted_cusp_probability, reduction_identity_check

SUITE_SEED = 20240601


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _gen(name: str, index: int = 0) -> np.random.Generator:
    return _rng.generator(SUITE_SEED, f"acceptance-{name}", index)


def criterion_mean_value(quick: bool = False, zeta2: float | None = None) -> CriterionResult:
    samples = 10**4 if quick else 10**5
    t0 = time.perf_counter()
    res = mean_value_mc(TestFunction("annulus_indicator", (1.0, 2.0)), samples, seed=7, zeta2=zeta2)
    dt = time.perf_counter() - t0
    ok = abs(res.z_score) <= 3.0 and dt <= 60.0
    return CriterionResult(1, "siegel mean value", ok,
                           f"estimate {res.estimate:.4f} ± {res.stderr:.4f} vs {res.predicted:.4f}, z = {res.z_score:+.2f}")


def criterion_cusp(quick: bool = False) -> CriterionResult:
    samples, tol = (10**5, 0.15) if quick else (10**6, 0.05)
    deltas = (0.1, 0.2, 0.3, 0.5)
    emp = cusp_probabilities(deltas, samples, seed=42)
    rel = {d: abs(emp[d] / predicted_cusp_probability(d) - 1.0) for d in deltas}
    worst = max(rel.values())
    return CriterionResult(2, "cusp measure", worst <= tol,
                           "rel err " + ", ".join(f"δ={d}: {rel[d]:.3f}" for d in deltas) + f" (tol {tol})")


def criterion_dual_count(quick: bool = False) -> CriterionResult:
    plan = [("1,2", 20 if quick else 100, 50.0), ("2,4", 5 if quick else 20, 10.0)]
    parts, ok = [], True
    for text, m, T in plan:
        model = parse_model(text)
        gen = _gen("dual-" + text)
        bad = 0
        for _ in range(m):
            if not reduction_identity_check(sample_uniform_point(model, gen), T, model).equal:
                bad += 1
        ok &= bad == 0
        parts.append(f"({text}) T={T:g}: {m - bad}/{m} equal")
    return CriterionResult(3, "dual-count identity", ok, "; ".join(parts))


def criterion_cells(quick: bool = False) -> CriterionResult:
    samples = 2000 if quick else 10**4
    parts, ok = [], True
    for text in ("1,2", "1,3"):
        model = parse_model(text)
        rep = cell_partition_check(model, 8, samples, _gen("cells-" + text))
        gen = _gen("birkhoff-" + text)
        sums = [birkhoff_count(model, sample_uniform_point(model, gen), 1.0, 8) for _ in range(3 if quick else 10)]
        good = rep.exactly_one == rep.samples == rep.index_agrees and all(b.equal for b in sums)
        ok &= good
        equal = sum(b.equal for b in sums)
        parts.append(f"({text}) {rep.exactly_one}/{rep.samples} in exactly one cell, "
                     f"Birkhoff sum = direct count for {equal}/{len(sums)} points (N=8)")
    return CriterionResult(4, "cell decomposition", ok, "; ".join(parts))


def criterion_sandwich(quick: bool = False) -> CriterionResult:
    samples = 2000 if quick else 10**4
    parts, total = [], 0
    for text in ("1,2", "1,3", "2,4"):
        model = parse_model(text)
        viol = [sandwich_violations(model, ell, samples, _gen("sandwich-" + text, ell)).violations
                for ell in (8, 16, 32)]
        total += sum(viol)
        parts.append(f"({text}) {viol}")
    return CriterionResult(5, "sandwich inclusions", total == 0, "violations at ℓ=8,16,32: " + "; ".join(parts))


def criterion_counting(quick: bool = False) -> CriterionResult:
    members = 40 if quick else 200
    grid = parse_T_grid("e4:e10:7" if quick else "e4:e12:9")
    slope_tol, scale_tol = (0.25, 0.35) if quick else (0.15, 0.20)
    t0 = time.perf_counter()
    fits = {}
    for text in ("1,2", "1,3"):
        model = parse_model(text)
        for c in (1.0, 0.5):
            fits[(text, c)] = ensemble_slope(model, c, model.beta_f, grid, members, seed=3)[0]
    dt = time.perf_counter() - t0
    m12 = parse_model("1,2")
    kappa = kappa_oracle(m12, 1.0).value
    main = fits[("1,2", 1.0)]
    rel = abs(main.slope - kappa) / kappa
    ok = main.r2 >= 0.95 and rel <= slope_tol and dt <= 600.0
    parts = [f"(1,2) slope {main.slope:.4f} vs κ {kappa:.4f} (rel {rel:.3f}), R² {main.r2:.4f}"]
    for text in ("1,2", "1,3"):
        d = parse_model(text).d
        ratio = fits[(text, 0.5)].slope / fits[(text, 1.0)].slope
        target = 0.5**d
        scale_rel = abs(ratio / target - 1.0)
        ok &= scale_rel <= scale_tol
        parts.append(f"({text}) slope ratio {ratio:.3f} vs {target:.3f}")
    return CriterionResult(6, "counting at the exponent", ok, "; ".join(parts))


def criterion_growth(quick: bool = False) -> CriterionResult:
    plan = [("1,2", 100.0, 200.0), ("1,3", 50.0, 100.0), ("2,4", 15.0, 25.0)]
    if quick:
        plan = [("1,2", 100.0, 200.0), ("1,3", 25.0, 50.0), ("2,4", 10.0, 15.0)]
    parts, ok = [], True
    for text, T1, T2 in plan:
        model = parse_model(text)
        e = model.growth_exponent
        r1 = rational_plucker_array(model, T1).shape[0] / T1**e
        r2 = rational_plucker_array(model, T2).shape[0] / T2**e
        change = abs(r2 / r1 - 1.0)
        ok &= change <= 0.10
        parts.append(f"({text}) {r1:.4f}→{r2:.4f} ({change:.3f})")
    return CriterionResult(7, "primitive growth", ok, "; ".join(parts))


def criterion_distance(quick: bool = False) -> CriterionResult:
    samples = 500 if quick else 5000
    parts, ok = [], True
    for text in ("1,2", "1,3", "2,4"):
        model = parse_model(text)
        ratios = distance_estimate_ratios(model, (0.3, 0.15, 0.075), samples, _gen("distance-" + text))
        ok &= all(b <= a for a, b in zip(ratios, ratios[1:])) and all(math.isfinite(r) for r in ratios)
        parts.append(f"({text}) " + ",".join(f"{r:.4f}" for r in ratios))
    return CriterionResult(8, "distance estimate", ok, "; ".join(parts))


def integrability_table(max_rank: int = 6) -> list[tuple[str, int, int, bool, bool, bool, bool]]:
    """Rows (type, rank, α, L1, L∞, L2-neighbor, L2-full) over A–D up to max_rank plus G2, F4."""
    cases = [(t, r) for t in "ABCD" for r in range(1, max_rank + 1)]
    cases = [(t, r) for t, r in cases if not (t in "BC" and r < 2) and not (t == "D" and r < 4)]
    cases += [("G", 2), ("F", 4)]
    rows = []
    for t, r in cases:
        for a in range(1, r + 1):
            ch = parabolic(t, r, a)
            rows.append((t, r, a, is_l1_integrable(ch), is_linf_integrable(ch),
                         l2_necessary_neighbor_test(ch), l2_necessary_full_test(ch).holds))
    return rows


def criterion_integrability(quick: bool = False) -> CriterionResult:
    rows = integrability_table(4 if quick else 6)
    linf_ok = all(linf == (r == 1) for _, r, _, _, linf, _, _ in rows)
    implication = all(nb or not full for *_, nb, full in rows)
    witness = l2_necessary_full_test(parabolic("A", 3, 2)).witness
    ok = linf_ok and implication and witness is not None
    word = None if witness is None else list(witness.word)
    return CriterionResult(9, "integrability checker", ok,
                           f"{len(rows)} cases, L∞ iff rank 1: {linf_ok}, full ⇒ neighbor: {implication}, "
                           f"(A3,α2) witness word {word}")


def criterion_equidist(quick: bool = False) -> CriterionResult:
    phi = Observable("smooth_cusp_height", 0.5)
    nb = 4 if quick else 10
    bases = sample_compact_bases(11, 2 * nb)
    mu = phi.haar_mean()
    single = {y: float(np.median([abs(k_orbit_average(phi, y, b).value - mu) for b in bases[:nb]]))
              for y in (4.0, 256.0)}
    double = {}
    for y1, y2 in ((4.0, 16.0), (64.0, 4096.0)):
        errs = []
        for b1, b2 in zip(bases[:nb], bases[nb:]):
            res, target = double_correlation(phi, phi, y1, y2, b1, b2)
            errs.append(abs(res.value - target))
        double[(y1, y2)] = float(np.median(errs))
    ok = single[256.0] < single[4.0] and double[(64.0, 4096.0)] < double[(4.0, 16.0)]
    return CriterionResult(10, "equidistribution decay", ok,
                           f"single median err y=4: {single[4.0]:.2e}, y=256: {single[256.0]:.2e}; "
                           f"double (4,16): {double[(4.0, 16.0)]:.2e}, (64,4096): {double[(64.0, 4096.0)]:.2e}")


CRITERIA: list[Callable[..., CriterionResult]] = [
    criterion_mean_value,
    criterion_cusp,
    criterion_dual_count,
    criterion_cells,
    criterion_sandwich,
    criterion_counting,
    criterion_growth,
    criterion_distance,
    criterion_integrability,
    criterion_equidist,
]


def run_criterion(fn: Callable[..., CriterionResult], quick: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    res = fn(quick=quick)
    res.seconds = time.perf_counter() - t0
    return res


def run_suite(quick: bool = False, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    out = []
    for fn in CRITERIA:
        res = run_criterion(fn, quick)
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out
