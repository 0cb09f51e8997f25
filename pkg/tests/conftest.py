import numpy as np
import pytest

from powss.problems import chain_test, co_tiger

UNIFORM = np.array([0.5, 0.5, 0.0])


@pytest.fixture(scope="session")
def tiger():
    return co_tiger()


@pytest.fixture(scope="session")
def chain():
    return chain_test()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
