import numpy as np
import pytest

from passive_isp.model import Grid, bump, validate_medium, validate_source, zero_medium

# acceptance lines collected by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def free_1024():
    return zero_medium(1024)


@pytest.fixture(scope="session")
def bump_medium_1024():
    x = Grid(1024).nodes
    return validate_medium(bump(x, 0.3, 0.7, 1.0), 0.5, 1e4)


@pytest.fixture(scope="session")
def bump_source_1024():
    x = Grid(1024).nodes
    return validate_source(bump(x, 0.2, 0.8, 1.0), 1e4)


def cosine_source(n_cells, m, amp=np.sqrt(2.0)):
    x = Grid(n_cells).nodes
    return validate_source(amp * np.cos(m * np.pi * x), 1e6, check_support=False)
