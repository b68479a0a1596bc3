import math

import numpy as np
import pytest

from warpedpoisson.geometry import ModelManifold, make_profile
from warpedpoisson.green import minimal_green


def model(family, n=3, r_max=60.0, **params):
    return ModelManifold(n, make_profile(family, r_max=r_max, **params))


@pytest.fixture(scope="session")
def euclid():
    return model("euclidean")


@pytest.fixture(scope="session")
def hyperbolic():
    return model("space_form")


@pytest.fixture(scope="session")
def powexp2():
    return model("power_exp", gamma=2.0)


@pytest.fixture(scope="session")
def cusp():
    return model("cusp")


@pytest.fixture(scope="session")
def green_euclid(euclid):
    return minimal_green(euclid)


@pytest.fixture(scope="session")
def green_hyperbolic(hyperbolic):
    return minimal_green(hyperbolic)


def hyperbolic_green_exact(r):
    # (coth r - 1)/(4 pi) written without cancellation
    r = np.asarray(r, dtype=float)
    return 2.0 / np.expm1(2.0 * r) / (4.0 * math.pi)
