from __future__ import annotations

import pytest

from kextract.params import Params

_acceptance: list[tuple[str, str, str]] = []


@pytest.fixture
def micro() -> Params:
    """n=3, n1=2, m=2, k=1, D=4, Delta=2."""
    return Params(n=3, n1=2, m=2, k=1, d=2, delta=1)


@pytest.fixture
def nw_micro() -> Params:
    """Small enough that N * N1 * m = 8 outputs fit a (16, 4, 1) greedy design."""
    return Params(n=2, n1=1, m=1, k=0, d=1, delta=0)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    if "acceptance" not in report.keywords:
        return
    title = report.nodeid.rsplit("::", 1)[-1]
    why = ""
    if report.failed:
        crash = getattr(report.longrepr, "reprcrash", None)
        why = crash.message.splitlines()[0] if crash else report.longreprtext.splitlines()[-1]
    _acceptance.append((title, report.outcome.upper(), why))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for title, outcome, why in _acceptance:
        status = "PASS" if outcome == "PASSED" else "FAIL"
        line = f"[{status}] {title}"
        if why:
            line += f"  -- {why}"
        terminalreporter.write_line(line)
