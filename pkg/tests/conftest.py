"""Shared test fixtures and the acceptance reporting hook."""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion.

    The recorded lines are echoed in the terminal summary so the whole
    acceptance slate is readable in one block at the end of a run.
    """

    def record(criterion: int, passed: bool, detail: str) -> None:
        status = "PASS" if passed else "FAIL"
        line = f"ACCEPTANCE {criterion}: {status} - {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        if not passed:
            pytest.fail(line, pytrace=False)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
