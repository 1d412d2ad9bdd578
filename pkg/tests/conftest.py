import warnings

import numpy as np
import pytest

from cavityrh import MaterialParams, SolverConfig, build_case_boundary, compose, solve
from cavityrh.annulus_map import SimulationQualityWarning


@pytest.fixture(scope="session")
def mat():
    return MaterialParams()


@pytest.fixture(scope="session")
def case1():
    return build_case_boundary("case1")


@pytest.fixture(scope="session")
def case1_map(case1):
    return compose(case1, 1.2)


@pytest.fixture(scope="session")
def case1_solution(case1, case1_map, mat):
    return solve(case1, mat, SolverConfig(x0=1.0), cmap=case1_map)


@pytest.fixture(scope="session")
def case1_wide():
    """Case 1 with joints 500 length units out, as in the residual studies."""
    spec = build_case_boundary("case1", x0=500.0)
    return solve(spec, MaterialParams(), SolverConfig(x0=500.0))


@pytest.fixture(scope="session")
def circle_solution():
    spec = build_case_boundary("circle", h=3.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SimulationQualityWarning)
        return solve(spec, MaterialParams(), SolverConfig(x0=1.0), k2=0.8)


def simulated_area(cmap, n=2 ** 16):
    """Area over 2 pi of the cavity traced by the backward map on the inner ring."""
    sig = np.exp(-2j * np.pi * np.arange(n) / n)
    z = cmap.z_of_zeta(cmap.alpha * sig)
    x, y = z.real, z.imag
    return abs(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)) / (2 * np.pi)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
