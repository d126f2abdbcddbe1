import numpy as np
import pytest

# (criterion, nodeid) -> [outcome, detail], in run order
_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def acceptance_report(request):
    """Attach a one-line measurement to the current criterion's summary line."""

    def record(detail):
        _criteria[_key(request.node)][1] = detail

    return record


def _key(item):
    return item.get_closest_marker("criterion").args[0], item.nodeid


def pytest_runtest_setup(item):
    if item.get_closest_marker("criterion"):
        _criteria[_key(item)] = ["FAIL", ""]


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if not item.get_closest_marker("criterion"):
        return
    entry = _criteria[_key(item)]
    if rep.skipped:
        entry[0] = "SKIP"
        if not entry[1] and isinstance(rep.longrepr, tuple):
            entry[1] = rep.longrepr[2]
    elif rep.failed:
        entry[0] = "FAIL"
    elif rep.when == "call":
        entry[0] = "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (criterion, _), (outcome, detail) in sorted(_criteria.items()):
        terminalreporter.write_line(f"{outcome} {criterion}" + (f": {detail}" if detail else ""))
