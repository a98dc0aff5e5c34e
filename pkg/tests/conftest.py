import numpy as np
import pytest

from fpcaband.io import load_tecator
from fpcaband.simulation import DgpConfig, dgp_sample


@pytest.fixture
def rng():
    return np.random.default_rng(20161220)


@pytest.fixture(scope="session")
def tecator():
    return load_tecator()


@pytest.fixture(scope="session")
def dgp_data():
    data, truth = dgp_sample(DgpConfig(200, 2.0, 3.2, seed=11))
    return data, truth
