import numpy as np
import pytest

from hypermap.cube import CameraMeta, HyperCube
from hypermap.scene import cornfields_spec, synthesize


@pytest.fixture(scope="session")
def small_scene():
    """Noiseless 64x64x16 five-class scene with an illumination field."""
    spec = cornfields_spec(width=64, height=64, bands=16, illumination=(0.5, 1.5), seed=42)
    cube, truth, db = synthesize(spec)
    return cube, truth, db


@pytest.fixture(scope="session")
def noisy_scene():
    spec = cornfields_spec(
        width=64, height=64, bands=16, illumination=(0.5, 1.5), noise_sigma=0.01, seed=42
    )
    cube, truth, db = synthesize(spec)
    return cube, truth, db


def make_cube(data, wavelengths=None, camera=None) -> HyperCube:
    data = np.asarray(data, dtype=np.float32)
    if wavelengths is None:
        wavelengths = np.linspace(400.0, 900.0, data.shape[2])
    if camera is None:
        camera = CameraMeta(h_m=1.0, fov_deg=90.0)
    return HyperCube(np.asarray(wavelengths, np.float32), data, camera)
