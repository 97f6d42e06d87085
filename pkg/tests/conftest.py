import numpy as np
import pytest

from pilot_dirac.lattice import Grid

_ACCEPTANCE_LINES = []


@pytest.fixture
def grid():
    return Grid(nx=256, dx=0.2)


@pytest.fixture
def big_grid():
    return Grid(nx=1024, dx=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance_line():
    """Record one criterion verdict; all are echoed in the terminal summary."""
    def record(line):
        print(line)
        _ACCEPTANCE_LINES.append(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
