import sys

import numpy as np
import pytest

from partition_opt import ProblemInstance


@pytest.fixture
def two_point():
    """Two consumers of mass 1/2; each agent only values one of them."""
    return ProblemInstance.from_arrays([0.5, 0.5], [[1.0, 0.0], [0.0, 1.0]], [0.5, 0.5])


@pytest.fixture
def two_point_us(two_point):
    return two_point.replace(capacities=np.array([0.5, 0.25]))


@pytest.fixture
def os_instance():
    return ProblemInstance.from_arrays([0.5, 0.5], [[3.0, 1.0], [1.0, 2.0]], [1.0, 1.0])


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
