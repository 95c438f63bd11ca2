import pytest

from towermarket.reference import REFERENCE_CONFIG, REFERENCE_PRICES

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def config():
    return REFERENCE_CONFIG


@pytest.fixture
def prices():
    return REFERENCE_PRICES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)
