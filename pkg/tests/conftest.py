import numpy as np
import pytest

from hopfmass.quadrature import IntegrationScheme


@pytest.fixture
def tensor_scheme():
    return IntegrationScheme(kind="tensor")


@pytest.fixture
def mc_scheme():
    # Modest sample count keeps the suite quick; acceptance tests use more.
    return IntegrationScheme(kind="mc", samples=60_000, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
