import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from emlocal.fields import LocalizedRandom, RandomTransverse, make_state
from emlocal.spectral import GridSpec

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.register_profile("thorough", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def grid16():
    return GridSpec.cube(16, 1.0)


@pytest.fixture(scope="session")
def random_state(grid16):
    return make_state(RandomTransverse(seed=12, exponent=2, cutoff=4), grid16)


@pytest.fixture(scope="session")
def localized_state(grid16):
    return make_state(LocalizedRandom(seed=4, width=0.1, spread=0.02, max_carrier=1), grid16)


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    scale = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / scale) if scale else float(np.linalg.norm(a))


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run

_CRITERIA: dict[int, dict] = {}


@pytest.fixture
def criterion(request):
    """Record measured values for the acceptance summary line of this test."""
    number = request.node.get_closest_marker("criterion").args[0]
    entry = _CRITERIA.setdefault(number, {"title": request.node.get_closest_marker("criterion").args[1]})
    notes = entry.setdefault("notes", [])
    return notes.append


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    if "test_acceptance.py" not in report.nodeid:
        return
    number = _CRITERIA_BY_NODE.get(report.nodeid)
    if number is None:
        return
    entry = _CRITERIA.setdefault(number, {})
    entry.setdefault("outcomes", []).append(report.outcome)


_CRITERIA_BY_NODE: dict[str, int] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _CRITERIA_BY_NODE[item.nodeid] = m.args[0]
            _CRITERIA.setdefault(m.args[0], {"title": m.args[1]})


def pytest_terminal_summary(terminalreporter):
    ran = {n: e for n, e in _CRITERIA.items() if e.get("outcomes")}
    if not ran:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ran):
        e = ran[n]
        ok = all(o == "passed" for o in e["outcomes"])
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {e.get('title', '')}"
        tr.write_line(line)
        for note in e.get("notes", []):
            tr.write_line(f"              {note}")
