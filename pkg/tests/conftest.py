import sys
from pathlib import Path

import pytest

SRC = Path(__file__).resolve().parent.parent / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from zs_spectra import potential as pot  # noqa: E402


@pytest.fixture(scope="session")
def constant_pot():
    return pot.constant(1.0)


@pytest.fixture(scope="session")
def plane_wave_pot():
    return pot.plane_wave(1.0, 1.0)


@pytest.fixture(scope="session")
def signum_pot():
    return pot.signum(1.0, 2.0)


@pytest.fixture(scope="session")
def dn_pot():
    return pot.jacobi_dn_potential(0.6)


@pytest.fixture(scope="session")
def exp_sin_sq_pot():
    return pot.exp_sin_sq()
