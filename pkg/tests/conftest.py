import pytest

# acceptance criteria: test node id -> one-line label
_ACCEPTANCE = {}
_OUTCOMES = {}


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            _ACCEPTANCE[item.nodeid] = (marker.args[0], marker.args[1])


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.nodeid in _ACCEPTANCE and (rep.when == "call" or rep.failed or rep.skipped):
        prev = _OUTCOMES.get(item.nodeid, "passed")
        if rep.failed:
            _OUTCOMES[item.nodeid] = "failed"
        elif rep.skipped:
            _OUTCOMES[item.nodeid] = "skipped"
        else:
            _OUTCOMES[item.nodeid] = prev


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    rows = sorted((_ACCEPTANCE[k][0], _ACCEPTANCE[k][1], v) for k, v in _OUTCOMES.items())
    for number, label, status in rows:
        mark = {"passed": "PASS", "failed": "FAIL"}.get(status, status.upper())
        terminalreporter.write_line(f"[{mark}] criterion {number:2d}: {label}")
    n_pass = sum(1 for r in rows if r[2] == "passed")
    terminalreporter.write_line(f"{n_pass}/{len(rows)} acceptance criteria passed")
