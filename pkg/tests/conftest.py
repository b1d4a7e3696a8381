"""Shared test instrumentation.

Every evolution executed during the session is audited for norm drift
(consumed by the unitarity acceptance criterion), and the acceptance
criteria are echoed as one PASS/FAIL line each at the end of the run.
"""

from __future__ import annotations

import pytest

import gqwalk.engine as _engine

_acceptance_results: dict[str, str] = {}


@pytest.fixture(scope="session", autouse=True)
def norm_audit():
    """Wrap the evolution entry point and record the worst final norm drift."""
    audit = {"worst": 0.0, "count": 0}
    original = _engine.evolve

    def wrapped(*args, **kwargs):
        state, record = original(*args, **kwargs)
        audit["worst"] = max(audit["worst"], abs(state.norm() - 1.0))
        audit["count"] += 1
        return state, record

    _engine.evolve = wrapped
    try:
        yield audit
    finally:
        _engine.evolve = original


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _acceptance_results[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance_results):
        outcome = _acceptance_results[name]
        terminalreporter.write_line(f"{outcome.upper():6s} {name}")
