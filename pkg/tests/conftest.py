import numpy as np
import pytest

from scene_helpers import make_scene


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def three_scene():
    return make_scene([(-2.0, -2.0), (0.0, 0.5), (2.0, 1.5)])
