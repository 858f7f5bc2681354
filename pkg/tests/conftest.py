import os

import pytest
from hypothesis import HealthCheck, settings

from bicavity import presets
from bicavity.core import CavityParams, SmoothFeedback

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=300, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_criteria = {}


def pytest_runtest_logreport(report):
    if report.when == "call" or report.outcome != "passed":
        marker = getattr(report, "acceptance", None)
        if marker is not None:
            prev = _criteria.get(marker, "PASS")
            _criteria[marker] = "PASS" if report.passed and prev == "PASS" else "FAIL"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        outcome.get_result().acceptance = (mark.args[0], mark.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), status in sorted(_criteria.items()):
        terminalreporter.write_line(f"criterion {num:2d}  {status}  {title}")


@pytest.fixture
def fig2a():
    return presets.fig2a()


@pytest.fixture
def fig2b():
    return presets.fig2b()


@pytest.fixture
def weak_params():
    return CavityParams(delta_c=1.0, u0=0.1, gamma0=0.0, epsilon=2.5e-5)


@pytest.fixture
def bistable_curve():
    return SmoothFeedback(0.8, 2.0, 5.0)
