import sys

import numpy as np
import pytest

from splitkdv.kdv import SolitonParams, soliton
from splitkdv.spectral import PeriodicGrid, RealField


def band_limited(grid, rng, cutoff=None, decay=0.0):
    """Random real field with modes ``|m| <= cutoff`` (default: the dealiasing cutoff)."""
    cutoff = grid.dealias_cutoff if cutoff is None else cutoff
    c = np.zeros(grid.N // 2 + 1, dtype=complex)
    m = np.arange(1, cutoff + 1)
    c[1 : cutoff + 1] = (rng.standard_normal(cutoff) + 1j * rng.standard_normal(cutoff)) * np.exp(-decay * m)
    c[0] = rng.standard_normal()
    return RealField(grid, grid.irfft(c))


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


@pytest.fixture(scope="session")
def grid2pi():
    return PeriodicGrid(2 * np.pi, 32)


@pytest.fixture(scope="session")
def kdv_grid():
    return PeriodicGrid(100.0, 512)


@pytest.fixture(scope="session")
def soliton_params():
    return SolitonParams(0.4, 50.0)


@pytest.fixture(scope="session")
def soliton0(kdv_grid, soliton_params):
    return soliton(kdv_grid, soliton_params, 0.0)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
