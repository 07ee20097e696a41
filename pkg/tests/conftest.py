import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

SEED = int(os.environ.get("SOSTAR_SEED", "20240607"))

settings.register_profile(
    "sostar",
    max_examples=25,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("sostar")


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


# one PASS/FAIL line per acceptance criterion at the end of the run
_CRITERIA: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    number = getattr(item.function, "criterion", None)
    if number is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        _CRITERIA[number] = (report.passed, item.function.__doc__.strip().splitlines()[0])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, text = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {text}")
