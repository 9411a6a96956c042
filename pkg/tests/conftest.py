import numpy as np
import pytest

from helpers import three_equilibria_model, unique_equilibrium_model


@pytest.fixture
def lq_unit():
    """c = kappa = lambda1 = lambda2 = 1, underestimated ability."""
    return unique_equilibrium_model(-0.5)


@pytest.fixture
def lq_three():
    """The overestimation instance with three equilibria on [0.3, 3]."""
    return three_equilibria_model()


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
