import numpy as np
import pytest

from pevolab.grid import Grid1D


@pytest.fixture
def grid():
    return Grid1D(40.0, 256)


@pytest.fixture
def small_grid():
    return Grid1D(20.0, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
