import math

import numpy as np
import pytest

from lyaplab.example9 import TARGETS, Example9Config, run_example9, two_matrix_family

SMALL = Example9Config(steps=4000, trajectories=8, var_steps=2000, var_trajectories=64, conc_n=500, conc_trials=100)


@pytest.fixture(scope="module")
def report():
    return run_example9(SMALL)


def test_family_shape():
    nu = two_matrix_family()
    assert np.allclose(np.linalg.det(nu.atoms), 1.0)
    assert nu.eccentricity() == pytest.approx(4.0)
    # A1 has the same singular values as A0
    assert np.allclose(np.linalg.svd(nu.atoms[1], compute_uv=False), [2.0, 0.5])


def test_table_layout(report):
    header, rows = report.table()
    assert header == ["quantity", "computed", "std_error", "paper_target"]
    names = [r[0] for r in rows]
    assert len(names) == len(set(names))
    assert {"lyap_gap", "n0@ref_gap", "tau@mc_gap", "sigma2_hat", "conc_pass", "kappa_star"} <= set(names)


def test_reference_constants_in_report(report):
    ref = report.details["ref"]
    assert (ref.n0, ref.N_theta) == (TARGETS["n0"], TARGETS["N_theta"])
    assert ref.tau == report.details["mc"].tau


def test_estimates_consistent(report):
    d = report.details
    assert abs(d["top"].value + d["bottom"].value) < 4 * d["gap_se"]
    assert 0 < d["variance"].value <= d["conc_constants"].sigma2_bound_geometric
    assert d["concentration"].passed
    heuristic = [r for r in report.rows if r[0] == "heuristic_gap"][0][1]
    assert heuristic == pytest.approx(2 * 0.25 * math.log(2) * 0.75)


def test_deterministic_given_seed(report):
    assert run_example9(SMALL).table() == report.table()
