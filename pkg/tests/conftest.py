import pytest

# Populated by test_acceptance.py: criterion number -> (passed, message).
ACCEPTANCE_LINES: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    def record(number: int, passed: bool, message: str) -> None:
        ACCEPTANCE_LINES[number] = (bool(passed), message)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        passed, message = ACCEPTANCE_LINES[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {message}")
