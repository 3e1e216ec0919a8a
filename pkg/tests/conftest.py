import pytest

# one verdict line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = {}


@pytest.fixture
def verdict():
    def record(key, passed, text):
        line = f"{'PASS' if passed else 'FAIL'} [{key}] {text}"
        ACCEPTANCE_LINES[key] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.lstrip("C"))):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
