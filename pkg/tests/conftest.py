import numpy as np
import pytest

_RESULTS_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call":
        return
    number, label = marker.args
    detail = dict(item.user_properties).get("detail", "")
    item.config.stash[_RESULTS_KEY][number] = (label, report.passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash[_RESULTS_KEY]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        label, passed, detail = results[number]
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number} {label}: {status}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
