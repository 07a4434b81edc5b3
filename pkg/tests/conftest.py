import numpy as np
import pytest

from helpers import tiny_model, toy_setup


@pytest.fixture(scope="session")
def toy():
    return toy_setup()


@pytest.fixture
def model64(toy):
    _, vocabs = toy
    return tiny_model(vocabs, seed=0, dtype=np.float64)


# one pass/fail line per acceptance criterion, printed after the run

_CRITERIA = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion checked by a test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    _CRITERIA.append((marker.args[0], call.excinfo is None))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
