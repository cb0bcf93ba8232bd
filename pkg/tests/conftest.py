import numpy as np
import pytest
from hypothesis import settings

from sblimp import ControllerGains, DesignParams

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")


@pytest.fixture
def params():
    return DesignParams()


@pytest.fixture
def gains():
    return ControllerGains()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
