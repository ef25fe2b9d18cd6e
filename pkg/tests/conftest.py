import numpy as np
import pytest

from recap.frames import LumaPlane, recording_from_arrays


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_plane(rng, h, w):
    return LumaPlane(values=rng.integers(0, 256, size=(h, w), dtype=np.uint8))


def gray_recording(levels, fps=30.0, h=24, w=32):
    """Recording of uniform gray frames at the given luma levels."""
    arrays = [np.full((h, w, 3), lv, dtype=np.uint8) for lv in levels]
    return recording_from_arrays(arrays, fps)
