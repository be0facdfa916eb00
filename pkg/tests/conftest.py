import numpy as np
import pytest

from regime_split import DetectionConfig


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny():
    """The three-point sample with a planted shift of 10."""
    return np.array([0.0, 0.0, 10.0])


@pytest.fixture
def bp_cfg():
    return DetectionConfig(grid="breakpoints", n_min=1)


@pytest.fixture
def gaussian_sample(rng):
    return rng.normal(size=500)


@pytest.fixture
def mixture_sample(rng):
    labels = rng.random(2000) < 0.1
    return rng.normal(size=2000) + 2.0 * labels


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
