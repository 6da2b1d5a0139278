import numpy as np
import pytest

from aloha_corr import Deployment, SlotConfig, grid_deployment, mean_power_matrix
from aloha_corr.deployment import derive_radio_params


def random_setup(rng, n, m, shapes=(1, 2), theta=1.5, noise=1e-3):
    """Planar deployment on a 3 x 3 square with unit wavelength."""
    pos = rng.uniform(0.0, 3.0, size=(n, 2))
    dep = Deployment(pos, np.ones(n), rng.choice(shapes, size=n), 1.0, 2.0)
    return dep, mean_power_matrix(dep), SlotConfig(m, theta, noise)


def grid_setup(m, shape):
    dep = grid_deployment(2, 3, 1500.0, q=0.5, shape=shape)
    theta, noise = derive_radio_params(1e7, 1.08e7, m)
    return dep, mean_power_matrix(dep), SlotConfig(m, theta, noise)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def square4():
    pos = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    dep = Deployment(pos, np.ones(4), np.array([1, 2, 1, 2]), 1.0, 2.0)
    return dep, mean_power_matrix(dep), SlotConfig(2, 1.5, 1e-3)
