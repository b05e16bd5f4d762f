import pytest

_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line and assert it."""

    def check(tag, label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {tag} {label}: {detail}"
        _LINES.append(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
