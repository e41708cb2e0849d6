import pytest

_ACCEPTANCE: dict[str, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and rep.when == "call":
        label, title = marker.args
        _ACCEPTANCE.setdefault(label, [title]).append(rep.passed)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE):
        title, *results = _ACCEPTANCE[label]
        verdict = "PASS" if results and all(results) else "FAIL"
        terminalreporter.write_line(f"{label} {verdict} - {title}")
