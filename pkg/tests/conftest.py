"""Repeats the acceptance verdict lines in the terminal summary."""

from support import ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE.items()):
            terminalreporter.write_line(line)
