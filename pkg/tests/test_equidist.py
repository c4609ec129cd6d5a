import math

import numpy as np
import pytest
from scipy.integrate import quad

from siegellab.equidist import (
    Observable,
    decay_probe,
    double_correlation,
    haar_mean_mc,
    k_orbit_average,
    orbit_bases,
    parse_observable,
    parse_y_grid,
    sample_compact_bases,
)
from siegellab.errors import ValidationError
from siegellab.lattice import rotation

CUSP = Observable("smooth_cusp_height", 0.5)
CONST = Observable("constant")


@pytest.fixture(scope="module")
def bases():
    return sample_compact_bases(11, 6)


def test_constant_observable():
    assert k_orbit_average(CONST, 37.0, np.eye(2)).value == pytest.approx(1.0, abs=1e-12)


def test_identity_flow_matches_direct_quadrature():
    direct, _ = quad(lambda t: CUSP(orbit_bases(1.0, np.array([t]), np.eye(2)))[0], 0, math.pi,
                     epsabs=1e-12, limit=200)
    assert k_orbit_average(CUSP, 1.0, np.eye(2)).value == pytest.approx(direct / math.pi, abs=1e-8)


def test_haar_mean_closed_form_matches_mc():
    est, se = haar_mean_mc(CUSP, 100_000, seed=4)
    assert abs(est - 6 * 0.25 / math.pi) < 3 * se
    assert CUSP.haar_mean() == pytest.approx(6 * 0.25 / math.pi)


def test_large_y_average_near_haar_mean(bases):
    _, se = haar_mean_mc(CUSP, 100_000, seed=4)
    res = k_orbit_average(CUSP, 1e4, bases[0])
    assert res.converged
    assert abs(res.value - CUSP.haar_mean()) < 3 * se


def test_refinement_is_converged(bases):
    for y in (4.0, 256.0):
        a = k_orbit_average(CUSP, y, bases[1])
        b = k_orbit_average(CUSP, y, bases[1], quad_points=2 * a.nodes)
        assert abs(a.value - b.value) < 1e-6


def test_k_invariance(bases):
    base = bases[2]
    a = k_orbit_average(CUSP, 16.0, base).value
    b = k_orbit_average(CUSP, 16.0, rotation(0.7) @ base).value
    assert a == pytest.approx(b, abs=2e-6)


def test_fourier_density():
    # a density with mean one leaves the constant observable's average at one
    assert k_orbit_average(CONST, 4.0, np.eye(2), fourier=[(0.3, -0.2)]).value == pytest.approx(1.0)
    # Z² has a quarter-turn symmetry, so only the 4θ mode can see it
    plain = k_orbit_average(CUSP, 4.0, np.eye(2)).value
    weighted = k_orbit_average(CUSP, 4.0, np.eye(2), fourier=[(0.0, 0.0), (0.5, 0.0)]).value
    assert weighted != pytest.approx(plain, abs=1e-4)


def test_double_correlation_degenerate_factor(bases):
    res, target = double_correlation(CUSP, CONST, 4.0, 64.0, bases[0], bases[1])
    assert res.value == pytest.approx(k_orbit_average(CUSP, 4.0, bases[0]).value, abs=2e-6)
    assert target == pytest.approx(CUSP.haar_mean())


def test_double_correlation_far_apart(bases):
    _, se = haar_mean_mc(CUSP, 100_000, seed=4)
    res, target = double_correlation(CUSP, CUSP, 64.0, 4096.0, bases[0], bases[3])
    # error of a product of two near-mean factors, each within a few MC sigma
    assert abs(res.value - target) < 3 * se * (2 * CUSP.haar_mean() + 3 * se) + 0.01


def test_decay_probe(bases):
    curve = decay_probe(CUSP, bases[:3], [4, 16, 64, 256, 1024])
    assert curve.median_errors[3] < curve.median_errors[0]
    assert curve.fitted_exponent < 0
    assert all(e >= 0 for e in curve.errors)
    flat = decay_probe(CONST, bases[:2], [1, 2, 4, 8, 16])
    assert max(flat.errors) <= 1e-12


def test_validation():
    with pytest.raises(ValidationError):
        decay_probe(CUSP, [np.eye(2)], [4, 16, 64])
    with pytest.raises(ValidationError):
        decay_probe(CUSP, [np.eye(2)], [4, 16, 8, 64, 128])
    with pytest.raises(ValidationError):
        k_orbit_average(CUSP, 0.5, np.eye(2))
    with pytest.raises(ValidationError):
        k_orbit_average(CUSP, 2.0, np.eye(2), quad_points=100)
    with pytest.raises(ValidationError):
        double_correlation(CUSP, CUSP, 16.0, 4.0, np.eye(2), np.eye(2))
    with pytest.raises(ValidationError):
        Observable("wiggle")


def test_parsers():
    assert parse_observable("cusp:0.5") == CUSP
    assert parse_observable("ball:1").kind == "smooth_ball_count"
    assert parse_y_grid("4:4096:geom6") == pytest.approx([4, 16, 64, 256, 1024, 4096])
    with pytest.raises(ValidationError):
        parse_y_grid("4:4096:lin6")


def test_compact_bases():
    B = sample_compact_bases(3, 20)
    assert len(B) == 20
    from siegellab.lattice import lambda1_batch

    assert np.all(lambda1_batch(np.array(B)) >= 1 / math.sqrt(2) - 1e-12)
    assert np.array_equal(np.array(B), np.array(sample_compact_bases(3, 20)))
