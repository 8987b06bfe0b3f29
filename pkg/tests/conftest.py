import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def well_conditioned(d: int, max_ecc: float = 50.0):
    """Strategy for d x d matrices with eccentricity at most ``max_ecc``."""
    entries = st.lists(st.floats(-3, 3, allow_nan=False), min_size=d * d, max_size=d * d)

    def build(xs):
        a = np.array(xs).reshape(d, d) + 2.0 * np.eye(d)
        s = np.linalg.svd(a, compute_uv=False)
        return a if s[-1] > 0 and s[0] / s[-1] <= max_ecc else None

    return entries.map(build).filter(lambda a: a is not None)


def random_gl(gen: np.random.Generator, d: int, max_ecc: float = 30.0) -> np.ndarray:
    while True:
        a = gen.normal(size=(d, d))
        s = np.linalg.svd(a, compute_uv=False)
        if s[0] / s[-1] <= max_ecc:
            return a


def random_sl2(gen: np.random.Generator) -> np.ndarray:
    a = random_gl(gen, 2, 20.0)
    det = np.linalg.det(a)
    if det < 0:
        a[:, 0] *= -1
        det = -det
    return a / np.sqrt(det)


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed again at the end of the run
ACCEPTANCE: list[str] = []


def verdict(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
