import numpy as np
import pytest
from hypothesis import settings

# sandbox/CI boxes have jittery clocks; property tests should not flake on time
settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def rand_image(rng, height, width, channels=3):
    from hazelevel import RasterImage

    return RasterImage(rng.random((height, width, channels)))


def rand_map(rng, height, width, lo=0.0, hi=1.0):
    from hazelevel import ScalarMap

    return ScalarMap(rng.uniform(lo, hi, (height, width)))
