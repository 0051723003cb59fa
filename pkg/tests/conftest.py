"""Acceptance reporting: one PASS/FAIL/SKIP line per numbered criterion.

Tests opt in with ``@pytest.mark.criterion(n)``. Measured quantities attached
through ``record_property`` are echoed next to the verdict.
"""

from collections import defaultdict

import pytest

_outcomes = defaultdict(list)
_details = defaultdict(list)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes[n].append(report.outcome)
        if report.when == "call":
            _details[n].extend(f"{k}={v}" for k, v in item.user_properties)


def _verdict(outcomes):
    if "failed" in outcomes:
        return "FAIL"
    if all(o == "skipped" for o in outcomes):
        return "SKIP"
    return "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for n in sorted(_outcomes):
        line = f"criterion {n:>2}: {_verdict(_outcomes[n])}"
        if _details[n]:
            line += "  (" + ", ".join(_details[n]) + ")"
        tr.write_line(line)
