import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from siegellab.count import (
    CountQuery,
    approximation_heights,
    birkhoff_count,
    count_approximations,
    counts_on_grid,
    ensemble_counts,
    ensemble_member,
    kappa_oracle,
    parse_T_grid,
    sandwich_count_check,
    slope_fit,
)
from siegellab.errors import ValidationError
from siegellab.flag import FlagPoint, parse_model, sample_uniform_point

P12, P13, P24 = parse_model("1,2"), parse_model("1,3"), parse_model("2,4")
seeds = st.integers(0, 2**32 - 1)
PHI = (1 + math.sqrt(5)) / 2


def line(model, *coords):
    return FlagPoint.from_rows(model, [coords])


def golden_oracle(T, tau=2.0, c=1.0):
    """Exhaustive scan of primitive (a, b) up to sign, angle measured with atan2."""
    found = set()
    R = int(T) + 1
    theta_x = math.atan2(PHI, 1.0)
    for a in range(0, R):
        for b in range(-R, R):
            if (a == 0 and b <= 0) or math.gcd(a, b) != 1:
                continue
            h = math.hypot(a, b)
            if not 1 <= h < T:
                continue
            diff = abs(math.atan2(b, a) - theta_x) % math.pi
            if min(diff, math.pi - diff) < c * h ** (-tau):
                found.add((a, b))
    return found


@pytest.mark.parametrize("k", [8, 10, 12])
def test_golden_ratio_counts_convergents(k):
    fib = [0, 1]
    while len(fib) < k + 2:
        fib.append(fib[-1] + fib[-2])
    T = float(fib[k])
    x = line(P12, 1.0, PHI)
    expected = golden_oracle(T)
    assert count_approximations(CountQuery(P12, x, 1.0, 2.0, T)) == len(expected)
    assert count_approximations(CountQuery(P12, x, 1.0, 2.0, T), method="shell") == len(expected)
    # every hit is a consecutive Fibonacci pair, i.e. a convergent of φ
    pairs = {(fib[i], fib[i + 1]) for i in range(1, len(fib) - 1)}
    assert expected <= pairs | {(1, 1), (0, 1), (1, 2)}


def test_rational_point_is_counted():
    x = line(P12, 3.0, 4.0)
    assert count_approximations(CountQuery(P12, x, 1.0, 2.0, 6.0)) >= 1


def test_query_validation():
    x = line(P12, 1.0, 0.0)
    with pytest.raises(ValidationError):
        CountQuery(P12, x, -1.0, 2.0, 10.0)
    with pytest.raises(ValidationError):
        CountQuery(P12, x, 1.0, 4.0, 10.0)
    with pytest.raises(ValidationError):
        CountQuery(P12, x, 1.0, 2.0, math.inf)
    with pytest.raises(ValidationError):
        approximation_heights(P24, x, 1.0, 1.0, 10.0, method="shell")


@given(seeds)
def test_shell_and_enumeration_agree(seed):
    gen = np.random.default_rng(seed)
    for model, T in ((P12, 400.0), (P13, 60.0)):
        x = sample_uniform_point(model, gen)
        a = approximation_heights(model, x, 1.0, model.beta_f, T, "enumerate")
        b = approximation_heights(model, x, 1.0, model.beta_f, T, "shell")
        assert np.allclose(a, b)


@given(seeds)
def test_monotonicity(seed):
    gen = np.random.default_rng(seed)
    x = sample_uniform_point(P12, gen)
    grid = [10.0, 50.0, 200.0, 800.0]
    counts = counts_on_grid(P12, x, 1.0, 2.0, grid)
    assert counts == sorted(counts)
    half = counts_on_grid(P12, x, 0.5, 2.0, grid)
    assert all(h <= f for h, f in zip(half, counts))
    steep = counts_on_grid(P12, x, 1.0, 2.5, grid)
    assert all(s <= f for s, f in zip(steep, counts))


def test_birkhoff_counts():
    x = sample_uniform_point(P12, np.random.default_rng(0))
    empty = birkhoff_count(P12, x, 1.0, 0)
    assert empty.total == 0 and empty.direct == 0
    for model in (P12, P13):
        x = sample_uniform_point(model, np.random.default_rng(11))
        res = birkhoff_count(model, x, 1.0, 5)
        assert res.equal
        assert res.per_cell == res.direct_per_cell
        assert sum(res.per_cell) == res.total
    with pytest.raises(ValidationError):
        birkhoff_count(P24, x, 1.0, 3)


def test_slope_fit():
    fit = slope_fit([1, 2, 3, 4], [3, 5, 7, 9])
    assert fit.slope == pytest.approx(2) and fit.r2 == pytest.approx(1)
    flat = slope_fit([1, 2, 3, 4], [5, 5, 5, 5])
    assert flat.slope == 0 and flat.r2 == 0
    with pytest.raises(ValidationError):
        slope_fit([1, 2, 3], [1, 2, 3])
    with pytest.raises(ValidationError):
        slope_fit([1, 3, 2, 4], [1, 2, 3, 4])


def test_kappa_oracle():
    k1 = kappa_oracle(P12, 1.0)
    assert k1.normalization == "exact" and k1.method == "quadrature"
    assert k1.value == pytest.approx(0.5 * 2 * 2 / (math.pi**2 / 6))
    assert kappa_oracle(P12, 0.5).value / k1.value == pytest.approx(0.5)
    assert kappa_oracle(P13, 0.5).value / kappa_oracle(P13, 1.0).value == pytest.approx(0.25)


def test_parse_T_grid():
    g = parse_T_grid("e4:e12:9")
    assert len(g) == 9 and g[0] == pytest.approx(math.exp(4)) and g[-1] == pytest.approx(math.exp(12))
    assert parse_T_grid("100,200") == [100.0, 200.0]
    for bad in ("e4:e2:3", "x", "1:2:1"):
        with pytest.raises(ValidationError):
            parse_T_grid(bad)


def test_ensemble_is_deterministic_and_worker_independent():
    grid = [50.0, 100.0, 200.0, 400.0]
    a = ensemble_counts(P12, 1.0, 2.0, grid, 6, seed=3, workers=1)
    b = ensemble_counts(P12, 1.0, 2.0, grid, 6, seed=3, workers=2)
    assert np.array_equal(a, b)
    assert np.allclose(ensemble_member(P12, 3, 2).frame, ensemble_member(P12, 3, 2).frame)


def test_counts_saturate_above_the_exponent():
    grid = [math.exp(9), math.exp(10)]
    counts = ensemble_counts(P12, 1.0, 3.0, grid, 30, seed=8)
    assert np.mean(counts[:, 0] == counts[:, 1]) >= 0.8


@pytest.mark.parametrize("ell", [8, 16, 32])
def test_sandwich_on_actual_counts(ell):
    gen = np.random.default_rng(ell)
    for _ in range(3):
        x = sample_uniform_point(P12, gen)
        assert sandwich_count_check(P12, x, 300.0, ell).holds
