import hypothesis
import numpy as np
import pytest

from aoi_mds import BASELINE_CHANNEL, GEParams

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture
def baseline():
    return BASELINE_CHANNEL


@pytest.fixture
def bursty():
    # alpha + beta far from 1: strongly correlated states
    return GEParams(alpha=0.05, beta=0.2, eps0=0.05, eps1=0.7)


def random_params(rng: np.random.Generator, count: int, lo: float = 0.02, hi: float = 0.98):
    out = []
    for _ in range(count):
        a, b = rng.uniform(lo, hi, 2)
        e0, e1 = rng.uniform(0.0, 1.0, 2)
        out.append(GEParams(float(a), float(b), float(e0), float(e1)))
    return out


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
