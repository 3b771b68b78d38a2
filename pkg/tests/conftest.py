import numpy as np
import pytest

from dampwave.model import BUMP_DATA, Grid, build_initial_data, preset


@pytest.fixture
def c1_small():
    n = 40
    return preset("C1", n), Grid.for_speed(n), build_initial_data(BUMP_DATA, n)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
