import pytest

from impurity_nls.core import Grid1D, gaussian, l2_norm

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def std_grid():
    return Grid1D(20.0, 1024)


@pytest.fixture(scope="session")
def std_phi(std_grid):
    return gaussian(std_grid, 1.0)


@pytest.fixture(scope="session")
def small_grid():
    """The many-body grid: eps = 0.5 is resolved (h = 0.125) and N = 4 fits the budget."""
    return Grid1D(2.0, 32)


@pytest.fixture(scope="session")
def small_phi(small_grid):
    phi = gaussian(small_grid, 0.5)
    return phi * (1.0 / l2_norm(phi))


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
