import pytest

_RESULTS = []


@pytest.fixture
def acceptance():
    """Record one named acceptance criterion: ``acceptance(name, ok, detail)``."""

    def record(name, ok, detail=""):
        _RESULTS.append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
