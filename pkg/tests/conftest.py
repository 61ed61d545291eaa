import numpy as np
import pytest

from hdrtsp.core import Instance

# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def rand_instance(rng, n, side=1000, forced=()):
    return Instance(rng.integers(0, side + 1, size=(n, 2)), forced_edges=forced)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
