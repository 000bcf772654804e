import numpy as np
import pytest

from confoundsim.panel import PanelDataset


def make_panel(n=4, t=6, seed=0, first_year=2000):
    rng = np.random.default_rng(seed)
    units = tuple(f"U{i}" for i in range(n))
    years = tuple(range(first_year, first_year + t))
    outcome = rng.uniform(1, 10, (n, t))
    unem = rng.uniform(2, 9, (n, t))
    pop = np.repeat(rng.integers(100_000, 5_000_000, n)[:, None], t, axis=1)
    return PanelDataset(units, years, outcome, unem, pop)


@pytest.fixture
def small_panel():
    return make_panel()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
