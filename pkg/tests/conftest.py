import numpy as np
import pytest

from sharp.extrapolation import PromotionContext
from sharp.rope import build_frequency_table


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def table():
    return build_frequency_table([32, 32], 10000.0)


@pytest.fixture
def ctx2x():
    return PromotionContext((64, 64), (128, 128))


_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and (report.when == "call" or report.outcome != "passed"):
        if report.when == "call" or report.failed:
            _acceptance.append((report.nodeid.split("::", 1)[1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
