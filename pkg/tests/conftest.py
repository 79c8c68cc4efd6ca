import warnings

import pytest

from harmexit.geometry import ModelSpace

warnings.filterwarnings("ignore", message=".*TBB.*")


@pytest.fixture(scope="session")
def h3():
    return ModelSpace.real_hyperbolic(3)


@pytest.fixture(scope="session")
def h2():
    return ModelSpace.real_hyperbolic(2)


@pytest.fixture(scope="session")
def dr11():
    return ModelSpace.damek_ricci(1, 1)
