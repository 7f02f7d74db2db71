import numpy as np
import pytest

from qzeno.phase_space import PhaseSpaceGrid, PhysicalParams, Symbol, make_grid
from qzeno.symbols import Region


@pytest.fixture
def ref_params():
    return PhysicalParams(hbar=0.05, mass=1.0)


@pytest.fixture
def ref_grid():
    return make_grid(8.0, 2048)


@pytest.fixture
def unit_region():
    return Region(0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def gaussian_symbol(grid: PhaseSpaceGrid, x0, p0, sx, sp):
    return Symbol.from_function(
        grid, lambda x, xi: np.exp(-((x - x0) ** 2) / (2 * sx**2) - ((xi - p0) ** 2) / (2 * sp**2)))


def small_dual(hbar=0.1, L=np.pi, M=64):
    params = PhysicalParams(hbar=hbar)
    return params, PhaseSpaceGrid.dual(make_grid(L, M), params)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
