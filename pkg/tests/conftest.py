import pytest

_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion."""

    def record(number: int, name: str, passed: bool, detail: str = "") -> bool:
        _LINES[number] = f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {name}" + (f": {detail}" if detail else "")
        print(_LINES[number])
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_LINES):
        terminalreporter.write_line(_LINES[n])
