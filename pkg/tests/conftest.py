"""Collects acceptance outcomes and prints one line per criterion."""

import pytest

_OUTCOMES = {}
_TITLES = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    _TITLES[number] = title
    ok = _OUTCOMES.setdefault(number, [])
    if report.when == "call" or report.failed:
        ok.append((report.passed, item.name, [v for k, v in item.user_properties if k == "detail"]))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        results = _OUTCOMES[number]
        passed = bool(results) and all(r[0] for r in results)
        details = "; ".join(d for _, _, ds in results for d in ds)
        line = f"criterion {number} ({_TITLES[number]}): {'PASS' if passed else 'FAIL'}"
        terminalreporter.write_line(line + (f"  [{details}]" if details else ""))
