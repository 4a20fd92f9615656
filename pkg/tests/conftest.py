import sys

import pytest

from ultraglab import asymptotics as asy
from ultraglab.gevrey import default_mollifier


@pytest.fixture(scope="session")
def moll2():
    return default_mollifier(2.0)


@pytest.fixture(scope="session")
def model2():
    return asy.scale_exponent(2.0)


@pytest.fixture(scope="session")
def grid():
    return asy.DEFAULT_GRID


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for cid in sorted(lines):
            terminalreporter.write_line(lines[cid])
