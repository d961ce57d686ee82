import math

import numpy as np
import pytest

from magbb.beamform import DesignParams
from magbb.fieldcore import CoilSpec, Medium, SphericalLocation


@pytest.fixture
def medium():
    return Medium()


@pytest.fixture
def params():
    return DesignParams()


@pytest.fixture
def params_20_10():
    # turn counts suggested as a starting point; only marginally above threshold at 1.2 m
    return DesignParams(tx=CoilSpec(0.1, 20, 1.0), rx=CoilSpec(0.01, 10, 0.2))


@pytest.fixture
def optimized():
    return SphericalLocation(1.2, math.pi, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
