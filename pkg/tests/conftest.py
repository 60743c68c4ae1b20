import pytest

_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record one verdict line per acceptance criterion."""
    def record(number: int, ok: bool, title: str, detail: str = "") -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        _LINES[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_LINES):
            terminalreporter.write_line(_LINES[k])
