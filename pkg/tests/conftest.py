import pytest

from susyosc.chain import FactorizationConfig, build_table
from susyosc.numerics import Grid

# admissible test chains: nodeless / one-node / nodeless seeds
M1 = FactorizationConfig.of((0.0, 0.5))
M1_SHIFT = FactorizationConfig.of((-0.5, 0.0))
M2 = FactorizationConfig.of((0.0, 0.3), (-1.0, 2.0))
M3 = FactorizationConfig.of((0.2, 0.3), (-0.6, 1.5), (-1.5, -0.5))

# large nu at even levels stands in for the odd seed (nu -> infinity)
SHIFT2 = FactorizationConfig.of((-0.5, 0.0), (-1.5, 1e8))
SHIFT3 = FactorizationConfig.of((-0.5, 0.0), (-1.5, 1e8), (-2.5, 0.0))

ADMISSIBLE = {"m1": M1, "m1_shift": M1_SHIFT, "m2": M2, "m3": M3,
              "shift2": SHIFT2, "shift3": SHIFT3}


@pytest.fixture(scope="session")
def grid():
    return Grid()


@pytest.fixture(scope="session")
def fine_grid():
    return Grid(n_points=24001)


_tables = {}


def table_for(config, grid):
    key = (config, grid)
    if key not in _tables:
        _tables[key] = build_table(config, grid)
    return _tables[key]


@pytest.fixture(scope="session")
def tables(grid):
    return {name: table_for(cfg, grid) for name, cfg in ADMISSIBLE.items()}


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
