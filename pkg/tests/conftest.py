from __future__ import annotations

import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")
_outcomes: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    number, name = int(m.group(1)), m.group(2)
    failed = report.failed
    if report.when == "call" or failed:
        prev = _outcomes.get(number)
        if prev is None or prev[0] == "PASS":
            _outcomes[number] = ("FAIL" if failed else "PASS", name)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        status, name = _outcomes[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}  {name.replace('_', ' ')}")
