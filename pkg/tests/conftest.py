"""Shared pytest plumbing: an always-visible acceptance summary."""

ACCEPTANCE_LINES = []


def record(line: str) -> None:
    """Queue a one-line verdict for the end-of-run summary."""
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
