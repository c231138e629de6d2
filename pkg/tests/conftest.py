import math

import pytest

from diracspec import BoundaryParams, CanonicalPotential, Grid


@pytest.fixture(scope="session")
def grid():
    return Grid(math.pi)


@pytest.fixture(scope="session")
def coarse():
    return Grid(math.pi, 1001)


@pytest.fixture(scope="session")
def bump():
    return CanonicalPotential.gauss_bumps([(1.2, 0.3, 0.8, 0.0), (2.0, 0.4, 0.0, 0.5)])


@pytest.fixture(scope="session")
def zero():
    return CanonicalPotential.zero()


@pytest.fixture
def free_bd():
    return BoundaryParams()


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion; printed at the end of the run."""

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
