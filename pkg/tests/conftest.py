import pytest

VERDICTS = {}


@pytest.fixture
def verdict():
    """Record one acceptance criterion: ``verdict(n, ok, detail)``; returns ``ok``."""

    def record(number, ok, detail=""):
        VERDICTS[number] = (bool(ok), detail)
        print(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(VERDICTS):
        ok, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
