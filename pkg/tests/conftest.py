import pytest

from _cases import ACCEPTANCE_LINES, GRID, case, oscillator, seed_spectrum


@pytest.fixture(scope="session")
def grid():
    return GRID


@pytest.fixture(scope="session")
def V():
    return oscillator()


@pytest.fixture(scope="session")
def s0():
    return seed_spectrum()


@pytest.fixture(scope="session")
def krein():
    return case("F")


@pytest.fixture(scope="session")
def case_a():
    return case("A")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[num])
