"""Collects acceptance verdicts and prints them as one block at the end of the run."""

VERDICTS = []


def record(number, title, passed, detail=""):
    line = f"criterion {number:>2} [{'PASS' if passed else 'FAIL'}] {title}"
    VERDICTS.append((number, line + (f" | {detail}" if detail else "")))


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(VERDICTS):
        terminalreporter.write_line(line)
