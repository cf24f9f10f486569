from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE: dict[str, tuple[str, list[str]]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    if "test_acceptance.py" not in report.nodeid:
        return
    notes = [str(v) for k, v in report.user_properties if k == "note"]
    _ACCEPTANCE[report.nodeid] = ("PASS" if report.passed else "FAIL", notes)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (status, notes) in _ACCEPTANCE.items():
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{status}  {name}")
        for note in notes:
            terminalreporter.write_line(f"      {note}")


@pytest.fixture
def note(record_property):
    """Attach a line to the acceptance summary printed at the end of the run."""
    return lambda text: record_property("note", text)
