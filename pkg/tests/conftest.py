import numpy as np
import pytest

from specact import Spectrum, make_gaussian_mixture, random_hermitian
from specact.rng import make_rng


@pytest.fixture
def mix():
    """Two-atom Gaussian mixture used throughout: e^{-x^2} + 0.6 e^{-0.5 x^2}."""
    return make_gaussian_mixture([(1.0, 1.0), (0.5, 0.6)])


@pytest.fixture
def mix_single():
    return make_gaussian_mixture([(1.0, 1.0)])


@pytest.fixture
def rng():
    return make_rng(20260816)


@pytest.fixture
def spec4():
    return Spectrum(np.array([-1.3, -0.4, 0.7, 1.6]))


@pytest.fixture
def herm4(rng):
    return random_hermitian(4, rng, norm=0.5)
