import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("pkg", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pkg")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unit_vector(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_rho(rng, rank=3):
    g = rng.normal(size=(3, rank)) + 1j * rng.normal(size=(3, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(".")[0].split()[-1])):
            terminalreporter.write_line(line)
