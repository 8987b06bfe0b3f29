import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lyaplab.constants import (
    Regime,
    SpectralInputs,
    concentration_constants,
    gamma_curve,
    holder_package_gl2,
    holder_package_gld,
    log_holder_package,
    markov_package,
    method_optimality_curve,
    snap_ceil,
    subtop_package,
)
from lyaplab.errors import BadEccentricity, BadOrder, BadRho, BadTau, BadTheta, DegenerateGap

REF = SpectralInputs(ecc=4.0, lyap_gap=0.2599, theta=0.5, diam_theta=1.0)


def test_reference_package_values():
    r = holder_package_gl2(REF)
    assert (r.n0, r.N_theta) == (11, 1056)
    assert r.tau0 == pytest.approx(1 - math.log(2) / (4 * math.log(8)), rel=1e-15)
    assert r.tau == pytest.approx(r.tau0 ** 32, rel=1e-14)
    assert r.tau == pytest.approx(0.0618, abs=5e-5)
    assert r.beta_star == pytest.approx(0.01035, abs=5e-6)
    assert r.C_star == pytest.approx(8 + 24 * 4 / (1 - r.tau), rel=1e-14)
    assert r.C_star == pytest.approx(110.3, abs=0.05)
    assert r.r_star == pytest.approx(0.02, rel=1e-14)


def test_gap_independent_parts():
    # tau, beta_star and C_star do not change with the gap; n0 and N_theta do
    a, b = holder_package_gl2(REF), holder_package_gl2(SpectralInputs(4.0, 0.944, 0.5, 1.0))
    assert (b.n0, b.N_theta) == (3, 288)
    assert a.tau == b.tau and a.beta_star == b.beta_star


def test_snap_ceil():
    assert snap_ceil(10.67) == 11
    assert snap_ceil(12.0 + 1e-12) == 12
    assert snap_ceil(12.0 - 1e-12) == 12
    assert snap_ceil(12.0 + 1e-6) == 13


def test_large_gap_gives_single_step():
    assert holder_package_gl2(SpectralInputs(4.0, 1e9, 0.5)).n0 == 1


def test_errors():
    with pytest.raises(DegenerateGap):
        holder_package_gl2(SpectralInputs(4.0, 0.0, 0.5))
    with pytest.raises(BadEccentricity):
        holder_package_gl2(SpectralInputs(1.0, 0.3, 0.5))
    with pytest.raises(BadTheta):
        SpectralInputs(4.0, 0.3, 0.0)
    with pytest.raises(BadTheta):
        log_holder_package(1.5, "MH")


@given(st.floats(1.01, 1e4), st.floats(1e-3, 10.0), st.floats(0.05, 1.0))
def test_report_invariants(ecc, gap, theta):
    r = holder_package_gl2(SpectralInputs(ecc, gap, theta))
    assert 0 < r.tau < 1
    assert 0 < r.beta_star < 1
    assert r.r_star > 0
    assert r.N_theta % r.n0 == 0


@given(st.floats(1.05, 100.0), st.floats(1e-2, 5.0), st.floats(0.1, 1.0))
def test_method_optimality_max_is_beta_star(ecc, gap, theta):
    inp = SpectralInputs(ecc, gap, theta)
    curve = method_optimality_curve(inp)
    assert abs(curve.beta_max - holder_package_gl2(inp).beta_star) <= 1e-12
    assert np.all(curve.betas <= curve.beta_max + 1e-15)


def test_gamma_one_curve():
    a = np.linspace(0, 1, 101)
    b = gamma_curve(1.0, a)
    assert b.max() == pytest.approx(0.5) and a[np.argmax(b)] == pytest.approx(0.5)


def test_literal_gamma_variant_differs_unless_theta_one():
    lit = method_optimality_curve(REF, theta_in_gamma=True)
    assert lit.gamma == pytest.approx(2 * holder_package_gl2(REF).gamma)
    one = SpectralInputs(4.0, 0.2599, 1.0)
    assert method_optimality_curve(one, theta_in_gamma=True).beta_max == pytest.approx(holder_package_gl2(one).beta_star, abs=1e-12)


def test_beta_monotone_in_ecc_and_gap():
    eccs = [1.5, 2, 4, 8, 16, 64]
    betas = [holder_package_gl2(SpectralInputs(e, 0.3, 0.5)).beta_star for e in eccs]
    assert all(x > y for x, y in zip(betas, betas[1:]))
    # the gap enters only through n0, and N_theta / n0 does not involve it: beta_star is flat in the gap
    gaps = np.linspace(0.05, 3.0, 30)
    bg = {holder_package_gl2(SpectralInputs(4.0, g, 0.5)).beta_star for g in gaps}
    assert len(bg) == 1


def test_gap_halved_doubles_n0():
    for g in (0.1, 0.2599, 0.7):
        n_full = holder_package_gl2(SpectralInputs(4.0, g, 0.5)).n0
        n_half = holder_package_gl2(SpectralInputs(4.0, g / 2, 0.5)).n0
        assert n_half >= 2 * n_full - 1


def test_n0_scale_stable():
    for s in (0.5, 2.0, 4.0):
        a = holder_package_gl2(SpectralInputs(4.0, 0.2599, 0.5)).n0
        b = holder_package_gl2(SpectralInputs(4.0, 0.2599 * s, min(1.0, 0.5 / s))).n0
        if 0.5 / s <= 1.0:
            assert a == b


def test_gld_same_as_gl2():
    assert holder_package_gld(REF) == holder_package_gl2(REF)


def test_kappa_table():
    assert log_holder_package(1.0, "MH").kappa_star == 1 / 3
    assert log_holder_package(1.0, Regime.PERPETUITY).kappa_star == 1 / 16
    assert log_holder_package(0.5, "mh").kappa_star == 0.2
    for th in np.linspace(0.01, 1, 50):
        assert log_holder_package(th, "MH").kappa_star > log_holder_package(th, "perpetuity").kappa_star


def test_subtop_package():
    s = subtop_package(4.0, 0.5, 1.0, 2, 1)
    assert s.E_k == 8.0
    assert s.beta_k == pytest.approx(0.5 / (0.5 + 4 * math.log(9)), rel=1e-14)
    assert s.C_k is None and "not supplied" in s.tau_note
    assert subtop_package(4.0, 0.5, 1.0, 3, 2, tau_k=0.5).C_k == pytest.approx(4 * 3 * 4**4 / 0.5)
    assert subtop_package(4.0, 1e12, 1.0, 3, 1).beta_k > 0.999
    assert subtop_package(1e12, 0.5, 1.0, 3, 1).beta_k < 0.01
    with pytest.raises(BadOrder):
        subtop_package(4.0, 0.5, 1.0, 3, 3)
    with pytest.raises(DegenerateGap):
        subtop_package(4.0, 0.0, 1.0, 3, 1)
    with pytest.raises(BadTau):
        subtop_package(4.0, 0.5, 1.0, 3, 1, tau_k=1.0)


def test_markov_package():
    fiber = SpectralInputs(4.0, 0.944, 0.5, 1.0)
    iid = markov_package(0.0, fiber)
    assert iid.tau0 == pytest.approx(math.exp(-iid.n0 * 0.5 * 0.944 / 2))
    assert iid.N_theta % iid.N_theta_fiber == 0
    sticky = markov_package(0.5, fiber)
    assert sticky.beta_star <= iid.beta_star
    prev = None
    for rho in (0.9, 0.99, 0.999, 0.9999):
        r = markov_package(rho, fiber)
        assert 0 < r.tau < 1
        if prev is not None:
            assert r.beta_star < prev
        prev = r.beta_star
    assert prev < 1e-5
    with pytest.raises(BadRho):
        markov_package(1.0, fiber)


def test_concentration_constants():
    c = concentration_constants(4.0, holder_package_gl2(REF).tau)
    assert c.C_HA == pytest.approx(2 * math.log(4) ** 2, rel=1e-14)
    assert c.C_HA == pytest.approx(3.8445, abs=1e-3)
    assert c.sigma2_bound_geometric == pytest.approx(2.05, abs=0.005)
    tau = holder_package_gl2(REF).tau
    assert c.sigma2_bound == pytest.approx(math.log(4) ** 2 * (1 + 2 * tau / (1 - tau)), rel=1e-14)
    assert c.tail_bound(100_000, 0.05) == pytest.approx(2 * math.exp(-30.5), rel=0.02)
    tiny = concentration_constants(1 + 1e-9, 0.5)
    assert tiny.C_HA < 1e-15 and tiny.sigma2_bound < 1e-15
    with pytest.raises(BadEccentricity):
        concentration_constants(1.0, 0.5)
    with pytest.raises(BadTau):
        concentration_constants(4.0, 1.0)
