import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion."""

    def _report(criterion: str, ok: bool, detail: str):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
