import sys

import numpy as np
import pytest

from wentzell.domain import build_interval, build_rectangle


@pytest.fixture
def rng():
    return np.random.default_rng(20241018)


@pytest.fixture(scope="session")
def unit_square():
    return build_rectangle(8, 8)


@pytest.fixture(scope="session")
def square16():
    return build_rectangle(16, 16)


@pytest.fixture(scope="session")
def unit_interval():
    return build_interval(32)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
