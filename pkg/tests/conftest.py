import numpy as np
import pytest
from hypothesis import settings

from panolayout import synth
from panolayout.sphere import ImageGeometry

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def geom():
    return ImageGeometry(64, 32)


@pytest.fixture
def big_geom():
    return ImageGeometry(256, 128)


@pytest.fixture
def room():
    return synth.random_room(np.random.default_rng(5), 6)


@pytest.fixture
def box():
    return synth.box_room(2.0, 1.5, 1.2, center=(0.3, -0.2))
