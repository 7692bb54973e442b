import numpy as np
import pytest

from vortexstab.grid import make_grid
from vortexstab.profile import kaufmann_scully, lamb_oseen


@pytest.fixture(scope="session")
def lo():
    return lamb_oseen()


@pytest.fixture(scope="session")
def ks():
    return kaufmann_scully()


@pytest.fixture(scope="session")
def g64():
    return make_grid(64)


@pytest.fixture(scope="session")
def g96():
    return make_grid(96)


@pytest.fixture(scope="session")
def g128():
    return make_grid(128)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
