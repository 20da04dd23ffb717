"""Shared pytest hooks.

The acceptance module records one PASS/FAIL line per criterion; this hook
replays those lines after the run summary so they stay visible even when
pytest captures per-test output.
"""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
