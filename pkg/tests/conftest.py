import numpy as np
import pytest

from isoray import (Camera, EnhanceParams, LocalTransferFunction, ScalarVolume,
                    SyntheticSpec, VolumeMeta, generate_synthetic)


@pytest.fixture(scope="session")
def ramp16():
    return generate_synthetic(SyntheticSpec(kind="ramp", dims=(16, 16, 16)))


@pytest.fixture(scope="session")
def ramp64():
    return generate_synthetic(SyntheticSpec(kind="ramp", dims=(64, 64, 64)))


@pytest.fixture(scope="session")
def sphere64():
    return generate_synthetic(SyntheticSpec(kind="sphere", dims=(64, 64, 64)))


@pytest.fixture(scope="session")
def sphere128():
    return generate_synthetic(SyntheticSpec(kind="sphere", dims=(128, 128, 128)))


@pytest.fixture(scope="session")
def dumbbell128():
    return generate_synthetic(SyntheticSpec(kind="dumbbell", dims=(128, 128, 128)))


@pytest.fixture(scope="session")
def nested128():
    return generate_synthetic(SyntheticSpec(kind="nested-spheres", dims=(128, 128, 128)))


@pytest.fixture(scope="session")
def twospheres128():
    return generate_synthetic(SyntheticSpec(kind="two-spheres", dims=(128, 128, 128)))


@pytest.fixture(scope="session")
def random8():
    rng = np.random.default_rng(7)
    meta = VolumeMeta(dims=(8, 8, 8), spacing=(0.8, 1.25, 0.5))
    return ScalarVolume(meta, rng.uniform(0.0, 1.0, 8 * 8 * 8))


@pytest.fixture()
def default_tf():
    return LocalTransferFunction.ramp((0.95, 0.9, 0.8), (0.5, 0.12, 0.1))


@pytest.fixture()
def default_params():
    return EnhanceParams(isovalue=0.5, delta_v=0.15, std_sample_distance=0.02)


def make_random_rays(vol, count, seed, spread=1.4):
    """Rays from points outside the volume aimed at random interior points."""
    from isoray import Ray
    rng = np.random.default_rng(seed)
    ext = np.asarray(vol.extent)
    center = ext * 0.5
    radius = spread * float(np.linalg.norm(ext))
    u = rng.normal(size=(count, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    origins = center + u * radius
    targets = rng.uniform(0.05, 0.95, size=(count, 3)) * ext
    rays = []
    for o, tgt in zip(origins, targets):
        d = tgt - o
        rays.append(Ray(o, d / np.linalg.norm(d)))
    return rays
