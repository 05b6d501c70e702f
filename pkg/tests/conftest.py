import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from anyon_gas.dft import RadialGrid, TrapPotential  # noqa: E402
from anyon_gas.spectra_bounds import HarmonicTrap  # noqa: E402


@pytest.fixture
def trap_r2():
    """V(r) = r^2, i.e. hbar*omega = 2."""
    return TrapPotential.harmonic(2.0)


@pytest.fixture
def unit_trap():
    return HarmonicTrap(1.0)


@pytest.fixture
def radial_grid():
    return RadialGrid.uniform(8.0, 10000)


@pytest.fixture
def small_radial_grid():
    return RadialGrid.uniform(8.0, 2048)
