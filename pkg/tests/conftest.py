import pytest

ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)`` lines for the terminal summary."""
    def record(name, passed, detail=""):
        ACCEPTANCE.append((name, bool(passed), detail))
        print("[%s] %s %s" % ("PASS" if passed else "FAIL", name, detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line("[%s] %s  %s" % ("PASS" if ok else "FAIL", name, detail))
