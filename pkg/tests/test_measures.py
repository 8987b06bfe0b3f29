import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_gl, well_conditioned
from lyaplab import measures as M
from lyaplab.errors import BadTheta, IndexMismatch, InputError, ParseError
from oracles import brute_force_transport, delta, dual_lp_value, lipschitz_potential_value, rotation


def _random_measure(gen, d=2, max_atoms=4):
    k = int(gen.integers(1, max_atoms + 1))
    w = gen.dirichlet(np.ones(k))
    return M.FiniteMatrixMeasure(np.array([random_gl(gen, d) for _ in range(k)]), w)


def test_weights_validated():
    with pytest.raises(InputError):
        M.FiniteMatrixMeasure([np.eye(2)], [0.9])
    with pytest.raises(InputError):
        M.FiniteMatrixMeasure([np.eye(2), 2 * np.eye(2)], [1.5, -0.5])
    with pytest.raises(IndexMismatch):
        M.FiniteMatrixMeasure([np.eye(2), 2 * np.eye(2)], [1.0])


def test_duplicate_atoms_merge():
    mu = M.FiniteMatrixMeasure([np.eye(2), np.eye(2), 2 * np.eye(2)], [0.25, 0.25, 0.5])
    assert len(mu) == 2
    assert sorted(mu.weights) == [0.5, 0.5]


def test_zero_weight_atoms_kept_but_not_in_support():
    mu = M.FiniteMatrixMeasure([np.eye(2), 2 * np.eye(2)], [1.0, 0.0])
    assert len(mu) == 2 and len(mu.support) == 1


def test_measure_eccentricity_and_log_det():
    mu = M.FiniteMatrixMeasure([np.diag([2.0, 0.5]), np.diag([3.0, 1.0])], [0.5, 0.5])
    assert mu.eccentricity() == pytest.approx(4.0, rel=1e-13)
    assert mu.mean_log_det() == pytest.approx(0.5 * math.log(3.0), rel=1e-13)


def test_inverse_and_convolution():
    a, b = np.diag([2.0, 1.0]), rotation(0.3)
    mu = M.FiniteMatrixMeasure([a, b], [0.4, 0.6])
    inv = mu.inverse()
    assert np.allclose(inv.atoms[0], np.diag([0.5, 1.0]))
    conv = mu.convolve(mu)
    assert len(conv) == 4
    assert conv.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert any(np.allclose(x, b @ a) for x in conv.atoms)


def test_wasserstein_between_diracs_is_delta_power():
    g, h = np.diag([2.0, 1.0]), np.array([[1.0, 1.0], [0.0, 1.0]])
    mu, nu = M.FiniteMatrixMeasure.dirac(g), M.FiniteMatrixMeasure.dirac(h)
    for theta in (0.25, 0.5, 1.0):
        assert M.wasserstein_theta(mu, nu, theta) == pytest.approx(delta(g, h) ** theta, rel=1e-12)


def test_wasserstein_self_distance_zero(gen):
    mu = _random_measure(gen)
    assert M.wasserstein_theta(mu, mu, 0.5) == pytest.approx(0.0, abs=1e-9)
    assert M.hausdorff_distance(mu, mu) == pytest.approx(0.0, abs=1e-12)


def test_transport_frozen_value():
    a, b = np.array([0.5, 0.5]), np.array([0.25, 0.75])
    cost = np.array([[0.0, 2.0], [1.0, 0.0]])
    value, plan = M.transport_lp(a, b, cost)
    # move 0.25 from row 0 to column 1 at cost 2
    assert value == pytest.approx(0.5, abs=1e-10)
    assert brute_force_transport(a, b, cost) == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(plan, [[0.25, 0.25], [0.0, 0.5]], atol=1e-9)


def test_theta_validated(gen):
    mu = _random_measure(gen)
    for bad in (0.0, 1.5, -1.0):
        with pytest.raises(BadTheta):
            M.wasserstein_theta(mu, mu, bad)


@given(st.integers(0, 10_000))
def test_lp_agrees_with_brute_force_and_dual(seed):
    gen = np.random.default_rng(seed)
    mu, nu = _random_measure(gen, max_atoms=3), _random_measure(gen, max_atoms=3)
    theta = float(gen.uniform(0.2, 1.0))
    c = M.cost_matrix(mu, nu, theta)
    w = M.wasserstein_theta(mu, nu, theta)
    assert w == pytest.approx(brute_force_transport(mu.weights, nu.weights, c), abs=1e-8)
    assert w == pytest.approx(dual_lp_value(mu.weights, nu.weights, c), abs=1e-7)


@given(st.integers(0, 10_000))
def test_lp_dominates_lipschitz_potentials(seed):
    gen = np.random.default_rng(seed)
    mu, nu = _random_measure(gen), _random_measure(gen)
    theta = float(gen.uniform(0.2, 1.0))
    w = M.wasserstein_theta(mu, nu, theta)
    metric = lambda g, h: delta(g, h) ** theta
    for _ in range(5):
        assert lipschitz_potential_value(mu.atoms, mu.weights, nu.atoms, nu.weights, metric, gen) <= w + 1e-9


@given(st.integers(0, 10_000))
def test_paired_upper_bound_dominates(seed):
    gen = np.random.default_rng(seed)
    k = int(gen.integers(1, 5))
    mu = M.FiniteMatrixMeasure([random_gl(gen, 2) for _ in range(k)], gen.dirichlet(np.ones(k)))
    nu = M.FiniteMatrixMeasure([random_gl(gen, 2) for _ in range(k)], gen.dirichlet(np.ones(k)))
    theta = float(gen.uniform(0.2, 1.0))
    assert M.wasserstein_theta(mu, nu, theta) <= M.finite_support_upper_bound(mu, nu, theta) + 1e-9


def test_paired_upper_bound_needs_equal_counts(gen):
    mu = M.FiniteMatrixMeasure.dirac(np.eye(2))
    nu = M.FiniteMatrixMeasure([np.eye(2), 2 * np.eye(2)], [0.5, 0.5])
    with pytest.raises(IndexMismatch):
        M.finite_support_upper_bound(mu, nu, 1.0)


@given(well_conditioned(2), well_conditioned(2), well_conditioned(2))
def test_support_topology_triangle_inequality(a, b, c):
    mus = [M.FiniteMatrixMeasure.dirac(x) for x in (a, b, c)]
    d = lambda p, q: M.support_topology_distance(p, q, 0.5)
    assert d(mus[0], mus[2]) <= d(mus[0], mus[1]) + d(mus[1], mus[2]) + 1e-9


def test_optimal_coupling_marginals(gen):
    mu, nu = _random_measure(gen), _random_measure(gen)
    cpl = M.optimal_coupling(mu, nu, 1.0)
    assert np.allclose(cpl.plan.sum(axis=1), mu.weights, atol=1e-9)
    assert np.allclose(cpl.plan.sum(axis=0), nu.weights, atol=1e-9)


def test_irreducibility_two_matrix_family():
    a0 = np.diag([2.0, 0.5])
    a1 = rotation(math.pi / 3) @ a0 @ rotation(-math.pi / 3)
    res = M.strong_irreducibility_check_d2(M.FiniteMatrixMeasure([a0, a1], [0.5, 0.5]))
    assert res.status is M.Irreducibility.IRREDUCIBLE


def test_irreducibility_detects_common_line_and_pairs():
    upper = M.FiniteMatrixMeasure([np.array([[2.0, 1.0], [0.0, 0.5]]), np.array([[1.0, 3.0], [0.0, 1.0]])], [0.5, 0.5])
    res = M.strong_irreducibility_check_d2(upper)
    assert res.status is M.Irreducibility.REDUCIBLE
    assert any(np.allclose(v, [1.0, 0.0]) for v in res.lines)
    # swapping the axes preserves the pair of coordinate lines
    swap = M.FiniteMatrixMeasure([np.diag([2.0, 0.5]), np.array([[0.0, 1.0], [1.0, 0.0]])], [0.5, 0.5])
    assert M.strong_irreducibility_check_d2(swap).status is M.Irreducibility.REDUCIBLE


def test_irreducibility_rotation_is_inconclusive():
    mu = M.FiniteMatrixMeasure.dirac(rotation(1.0))
    assert M.strong_irreducibility_check_d2(mu).status is M.Irreducibility.INCONCLUSIVE


def test_measure_file_roundtrip(tmp_path, gen):
    mu = _random_measure(gen, d=3)
    path = tmp_path / "m.json"
    M.dump_measure(mu, path)
    back = M.load_measure(path)
    assert np.allclose(back.atoms, mu.atoms) and np.allclose(back.weights, mu.weights)


def test_measure_file_errors_carry_line_numbers():
    text = '{\n "dim": 2,\n "atoms": [[1,0,0,1]],\n "weights": [0.5]\n}\n'
    with pytest.raises(ParseError, match=r"m\.json:4:"):
        M.parse_measure(text, source="m.json")
    assert M.parse_measure(text, renormalize=True).weights[0] == 1.0
    with pytest.raises(ParseError, match=":3:"):
        M.parse_measure('{\n "dim": 2,\n "atoms": [[1,0,0]],\n "weights": [1]\n}', source="x")
    with pytest.raises(ParseError):
        M.parse_measure("{not json")
    with pytest.raises(ParseError):
        M.parse_measure(json.dumps({"dim": 2, "atoms": [[1, 2, 2, 4]], "weights": [1]}))
