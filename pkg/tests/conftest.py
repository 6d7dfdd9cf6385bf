import numpy as np
import pytest

from hqc.image import RasterImage


def textured_rgb(rng, height, width):
    """Structured uint8 image with gradient, stripes and grain: passes the
    texture filter and compresses to a nontrivial size."""
    y, x = np.mgrid[0:height, 0:width]
    base = (x * 3 + y * 2) % 256
    stripes = 60.0 * np.sin(x / 3.5) * np.cos(y / 5.0)
    grain = rng.normal(0.0, 18.0, (height, width, 3))
    img = base[..., None] + stripes[..., None] + grain
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def small_rgb(rng):
    return RasterImage(textured_rgb(rng, 48, 64))
