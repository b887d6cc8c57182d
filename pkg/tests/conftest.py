import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from chlimit.expansion import build_radial_approximation  # noqa: E402
from chlimit.profiles import DoubleWell, build_profile_set  # noqa: E402

ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: one test per acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def well():
    return DoubleWell(1.0)


@pytest.fixture(scope="session")
def profiles(well):
    return build_profile_set(well)


@pytest.fixture(scope="session")
def field(profiles):
    return build_radial_approximation(0.05, profiles=profiles)


@pytest.fixture(scope="session")
def coarse_field(profiles):
    return build_radial_approximation(0.08, profiles=profiles)
