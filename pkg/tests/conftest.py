import numpy as np
import pytest
from hypothesis import settings

from seqbalance.core import ArrivalSequence, CovariateSpace

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def four_points():
    return ArrivalSequence(CovariateSpace.continuous(1), [0.1, 0.7, 0.4, 0.9])


@pytest.fixture
def zeros_then_ones():
    return ArrivalSequence(CovariateSpace.continuous(1), [0.0, 0.0, 1.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        detail = dict(report.user_properties).get("detail", "")
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _acceptance:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {detail}".rstrip())
