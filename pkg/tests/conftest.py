import pytest

_REPORT: dict[int, str] = {}


@pytest.fixture
def report():
    """Record one summary line for an acceptance criterion."""
    def record(number: int, ok: bool, detail: str, label: str | None = None):
        status = label or ("PASS" if ok else "FAIL")
        _REPORT[number] = f"criterion {number:>2}: {status}  {detail}"
        print(_REPORT[number])
    return record


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_REPORT):
            terminalreporter.write_line(_REPORT[n])
