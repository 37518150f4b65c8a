import pytest

_LINES = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line; all lines are repeated in the terminal summary."""

    def record(label: str, ok: bool, detail: str, seconds: float) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail} [{seconds:.1f} s]"
        _LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
