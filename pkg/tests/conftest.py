"""Shared test plumbing: collects acceptance-criterion verdict lines and
prints them in a summary section at the end of the run."""

_CRITERION_LINES = []


def record_criterion(line: str) -> None:
    """Register one pass/fail line; also printed immediately for -s runs."""
    _CRITERION_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _CRITERION_LINES:
        terminalreporter.write_line(line)
