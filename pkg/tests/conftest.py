"""Shared pytest wiring: the acceptance scoreboard.

The acceptance tests funnel one PASS/FAIL line each into a shared list;
printing it from the terminal-summary hook guarantees the scoreboard
lands in the run log whatever the capture settings are.
"""

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def verdict():
    """Record a one-line verdict for an acceptance gate, then assert it."""

    def _record(tag, ok, detail):
        line = f"[{tag}] {'PASS' if ok else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance scoreboard")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
