import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from csslab.grid import SpectralGrid

os.environ.setdefault("CSS_LAB_THREADS", "1")

settings.register_profile(
    "lab", max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("lab")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid8():
    return SpectralGrid(8, 2 * np.pi)


@pytest.fixture(scope="session")
def grid64():
    return SpectralGrid(64, 20.0)


@pytest.fixture(scope="session")
def grid256():
    return SpectralGrid(256, 40.0)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(LINES):
            terminalreporter.write_line(LINES[number])
