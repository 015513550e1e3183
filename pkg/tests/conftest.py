import math

import pytest

from casimirlab.spectrum import (BoundaryCondition, BoxGeometry, IntervalGeometry,
                                 build_box_spectrum, build_interval_spectrum)

D = BoundaryCondition.dirichlet()
N = BoundaryCondition.neumann()
R = BoundaryCondition.robin


def interval(a=1.0, left=D, right=None):
    return IntervalGeometry(a, left, left if right is None else right)


@pytest.fixture(scope="session")
def dirichlet_spec():
    return build_interval_spectrum(interval(), 10000)


@pytest.fixture(scope="session")
def dirichlet_pi():
    return build_interval_spectrum(interval(math.pi), 400)


@pytest.fixture(scope="session")
def neumann_spec():
    return build_interval_spectrum(interval(1.0, N), 10000)


@pytest.fixture(scope="session")
def robin_spec():
    return build_interval_spectrum(interval(1.0, R(-1.0)), 10000)


@pytest.fixture(scope="session")
def box2_spec():
    box = BoxGeometry((interval(), interval()))
    return build_box_spectrum(box, 1200, 200_000)


@pytest.fixture(scope="session")
def box3_spec():
    box = BoxGeometry((interval(), interval(), interval()))
    return build_box_spectrum(box, 700, 20_000_000)


# PASS/FAIL lines recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
