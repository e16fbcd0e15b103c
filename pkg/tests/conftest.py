import numpy as np
import pytest
from hypothesis import settings

from iterfunc.designs import design1_analytic, design1_schedules

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def analytic1():
    """Exact Design-1 CDFs and schedules."""
    g1, g2 = design1_analytic()
    p1, p2 = design1_schedules()
    return g1, g2, p1, p2


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

