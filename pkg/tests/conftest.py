import numpy as np
import pytest

from edgesim.topology import build_grid_topology


@pytest.fixture(scope="session")
def grid5():
    return build_grid_topology(5, 5)


@pytest.fixture(scope="session")
def grid3():
    return build_grid_topology(3, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
