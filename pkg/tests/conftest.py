import numpy as np
import pytest

from blimpsim.dynamics import default_plant


@pytest.fixture(scope="session")
def plant():
    return default_plant()


@pytest.fixture(scope="session")
def packed(plant):
    return plant.pack()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
