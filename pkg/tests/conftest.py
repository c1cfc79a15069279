import numpy as np
import pytest

from ggps import Binomial, Geometric, Logarithmic, Poisson
from ggps.cli import load_bundled

FAMILIES = {
    "geometric": Geometric(),
    "poisson": Poisson(),
    "logarithmic": Logarithmic(),
    "binomial": Binomial(5),
}

# interior theta values per family, spanning small to large
THETAS = {
    "geometric": (0.05, 0.3, 0.6, 0.9),
    "poisson": (0.1, 1.0, 3.0, 8.0),
    "logarithmic": (0.05, 0.3, 0.6, 0.9),
    "binomial": (0.1, 0.5, 1.0, 3.0),
}


@pytest.fixture(params=sorted(FAMILIES))
def family(request):
    return FAMILIES[request.param]


@pytest.fixture(scope="session")
def glass():
    return load_bundled("glass_fibers")


@pytest.fixture(scope="session")
def phosphorus():
    return load_bundled("phosphorus")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
