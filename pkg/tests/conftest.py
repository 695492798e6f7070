import pytest

ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record a criterion's outcome: acceptance(k, passed, detail)."""

    def record(k, passed, detail):
        ACCEPTANCE[k] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
