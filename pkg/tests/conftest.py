import pytest

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.split(".")[0])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def report():
    def record(key: str, passed: bool, text: str) -> None:
        line = f"criterion {key}: {'PASS' if passed else 'FAIL'}  {text}"
        ACCEPTANCE_LINES[key] = line
        print(line)

    return record
