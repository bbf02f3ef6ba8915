import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bayesqd.space import MixedSpace

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def mixed_space():
    return MixedSpace(
        continuous_bounds=((-5.0, 5.0), (0.0, 2.0)),
        discrete_levels=((1.0, 2.0, 4.0),),
        categorical_levels=(3, 2),
    )


@pytest.fixture(scope="session")
def unit_space_1d():
    return MixedSpace(continuous_bounds=((0.0, 1.0),))


def pytest_terminal_summary(terminalreporter):
    """Print the one-line verdict of every acceptance criterion that ran."""
    mod = sys.modules.get("test_acceptance")
    report = getattr(mod, "REPORT", None)
    if report:
        terminalreporter.section("acceptance criteria")
        for n in sorted(report):
            terminalreporter.write_line(report[n])
