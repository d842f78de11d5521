from collections import defaultdict

import pytest

# criterion number -> title, passing count, failing test names
_CRITERIA: dict = defaultdict(lambda: {"title": "", "passed": 0, "failed": []})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result()._criterion = mark.args


def pytest_runtest_logreport(report):
    mark = getattr(report, "_criterion", None)
    if mark is None:
        return
    entry = _CRITERIA[mark[0]]
    entry["title"] = mark[1]
    name = report.nodeid.split("::")[-1]
    if report.when == "call" and report.passed:
        entry["passed"] += 1
    elif report.failed:
        entry["failed"].append(name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["passed"] and not e["failed"] else "FAIL"
        line = f"criterion {n} ({e['title']}): {status} [{e['passed']}/{e['passed'] + len(e['failed'])} checks]"
        if e["failed"]:
            line += " failing: " + ", ".join(e["failed"])
        terminalreporter.write_line(line)
