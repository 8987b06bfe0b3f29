import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lyaplab.cocycle import CocycleRunConfig, estimate_asymptotic_variance, estimate_top_exponent
from lyaplab.errors import BadGrid
from lyaplab.example9 import two_matrix_family
from lyaplab.ldp import (
    binomial_ceiling,
    central_slope,
    concentration_check,
    estimate_pressure,
    legendre_conjugate,
    legendre_transform,
    lower_convex_envelope,
    rate_from_pressure,
    symmetric_grid,
)
from lyaplab.measures import FiniteMatrixMeasure
from oracles import rotation


def test_pressure_zero_at_origin_and_linear_for_dirac():
    nu = FiniteMatrixMeasure.dirac(np.diag([2.0, 0.5]))
    curve = estimate_pressure(nu, symmetric_grid(2.0, 8), n=50, trials=10, seed=0, v=[1.0, 0.0])
    assert curve.at(0.0) == 0.0
    assert np.allclose(curve.values, curve.s_grid * math.log(2), atol=1e-12)


def test_grid_clipping_and_validation():
    nu = two_matrix_family()
    curve = estimate_pressure(nu, np.linspace(-10, 10, 21), n=20, trials=20, seed=0)
    assert np.all(np.abs(curve.s_grid) <= 5 / math.log(4) + 1e-12)
    with pytest.raises(BadGrid):
        estimate_pressure(nu, [1.0, 0.5], n=20, trials=20, seed=0)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=30))
def test_convex_envelope_is_convex_minorant(ys):
    x = np.arange(len(ys), dtype=float)
    y = np.array(ys)
    env = lower_convex_envelope(x, y)
    assert np.all(env <= y + 1e-9)
    assert np.all(np.diff(env, 2) >= -1e-9)


def test_envelope_fixes_convex_input():
    x = np.linspace(-1, 1, 11)
    assert np.allclose(lower_convex_envelope(x, x**2), x**2)


def test_legendre_of_line_is_point_mass():
    s = symmetric_grid(3.0, 30)
    r = rate_from_pressure(s, 0.7 * s, [0.2, 0.7, 1.2])
    assert r.values[1] == pytest.approx(0.0, abs=1e-12)
    assert r.clipped[0] and r.clipped[2] and not r.clipped[1]


def test_legendre_of_quadratic():
    sig2, lam = 0.3, 0.5
    s = symmetric_grid(20.0, 4000)
    eps = np.linspace(-0.5, 1.5, 41)
    r = rate_from_pressure(s, sig2 * s**2 / 2 + lam * s, eps)
    assert np.allclose(r.values, (eps - lam) ** 2 / (2 * sig2), atol=1e-4)
    assert r.argmin == pytest.approx(lam, abs=0.05)


def test_double_legendre_recovers_pressure():
    s = symmetric_grid(2.0, 200)
    lam = 0.1 * s**2 + 0.3 * s + 0.05 * s**4
    eps = np.linspace(-5.0, 5.0, 4001)
    rate = rate_from_pressure(s, lam, eps)
    back, _, _ = legendre_conjugate(eps, rate.values, s)
    assert np.allclose(back, lam, atol=2e-3)


def test_pressure_convex_and_slope_matches_top():
    nu = two_matrix_family()
    curve = estimate_pressure(nu, symmetric_grid(1.0, 10), n=400, trials=2000, seed=1)
    sd = np.diff(curve.raw_values, 2)
    assert np.all(sd >= -3 * (curve.std_errors[:-2] + 2 * curve.std_errors[1:-1] + curve.std_errors[2:]))
    slope, se = central_slope(curve)
    top = estimate_top_exponent(nu, CocycleRunConfig(steps=50_000, trajectories=16, seed=2))
    assert abs(slope - top.value) < 3 * math.hypot(se, top.std_error) + 2e-3


def test_rate_near_minimum_is_quadratic():
    nu = two_matrix_family()
    n = 400
    curve = estimate_pressure(nu, symmetric_grid(1.5, 300), n=n, trials=4000, seed=3)
    slope, _ = central_slope(curve)
    var = estimate_asymptotic_variance(nu, CocycleRunConfig(steps=2000, trajectories=512, seed=4)).value
    # deviations of one standard deviation of lambda_n at this n
    sig = math.sqrt(var / n)
    eps = slope + np.array([-1.0, -0.5, 0.5, 1.0]) * sig
    rate = legendre_transform(curve, eps)
    quad = (eps - slope) ** 2 / (2 * var)
    assert np.all(np.abs(rate.values - quad) <= 0.2 * quad)


def test_rate_nonnegative_min_near_top():
    nu = two_matrix_family()
    curve = estimate_pressure(nu, symmetric_grid(2.0, 40), n=200, trials=1000, seed=5)
    eps = np.linspace(0.3, 0.65, 71)
    rate = legendre_transform(curve, eps)
    assert np.all(rate.values >= 0)
    assert abs(rate.argmin - central_slope(curve)[0]) <= eps[1] - eps[0] + 1e-12


def test_binomial_ceiling():
    assert binomial_ceiling(1000, 0.0) == 0
    assert binomial_ceiling(1000, 1.0) == 1000
    assert binomial_ceiling(1000, 0.01) >= 10


def test_concentration_deterministic_and_impossible_deviation():
    det = FiniteMatrixMeasure.dirac(np.diag([2.0, 0.5]))
    res = concentration_check(det, [1.0, 0.0], 0.01, 100, 50, seed=0, tau=0.5)
    assert res.empirical_tail == 0 and res.passed and res.bound > 0
    nu = two_matrix_family()
    res = concentration_check(nu, [1.0, 0.0], 1.5 * math.log(4), 100, 200, seed=0, tau=0.06)
    assert res.empirical_tail == 0 and res.passed


def test_concentration_on_rotations():
    rot = FiniteMatrixMeasure([rotation(0.2), rotation(1.1)], [0.5, 0.5])
    res = concentration_check(rot, [1.0, 0.0], 0.01, 100, 50, seed=0)
    assert res.empirical_tail == 0 and res.passed
