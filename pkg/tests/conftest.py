import numpy as np
import pytest

from semilat import kernels
from semilat.models import make_system, find_level_point


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # first call compiles the jit kernels; keeps timings out of the tests
    kernels.warmup()


@pytest.fixture(scope="session")
def ho1d():
    return make_system("ho1d", E0=np.array([0.5]))


@pytest.fixture(scope="session")
def ho1d_point(ho1d):
    return find_level_point(ho1d, [0.5], np.array([1.0, 0.0]))


@pytest.fixture(scope="session")
def hl():
    return make_system("ho2d_hl", E0=np.array([1.0, 0.3]))


@pytest.fixture(scope="session")
def hl_point(hl):
    return find_level_point(hl, [1.0, 0.3], np.array([0.9, 0.1, 0.1, 0.5]))


@pytest.fixture(scope="session")
def central():
    return make_system("central_quartic", params={"lam": 0.1},
                       E0=np.array([2.0, 0.5]))


@pytest.fixture(scope="session")
def central_point(central):
    return find_level_point(central, [2.0, 0.5], np.array([1.0, 0.1, 0.2, 0.6]))
