"""Reference full volume renderer over a single transitional transfer function.

Serves as the numerical oracle for the enhanced isosurface colors and as the
performance baseline: it composites many samples per ray where the enhanced
renderer resolves one intersection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .camera import Camera
from .enhance import (DEFAULT_LIGHTS, EnhanceParams, LocalTransferFunction,
                      ShadingParams, lights_arrays)
from .errors import ConfigError
from .raycast import CropBounds
from .volume import ScalarVolume


@dataclass(frozen=True)
class TransitionalTF1D:
    """1D transfer function that ramps from transparent to opaque over delta_v."""

    isovalue: float
    delta_v: float
    local_tf: LocalTransferFunction
    std_sample_distance: float

    def __post_init__(self):
        if self.delta_v <= 0.0 or self.std_sample_distance <= 0.0:
            raise ConfigError("delta_v and std_sample_distance must be > 0")

    @classmethod
    def from_enhance(cls, tf: LocalTransferFunction, params: EnhanceParams) -> "TransitionalTF1D":
        return cls(isovalue=params.isovalue, delta_v=params.delta_v,
                   local_tf=tf, std_sample_distance=params.std_sample_distance)


def eval_tf(tf: TransitionalTF1D, v: float) -> tuple[float, float, float, float]:
    """(r, g, b, alpha) at scalar v; alpha is at the reference sample distance.

    Below the isovalue the medium is fully transparent, above isovalue+delta_v
    fully opaque with the last entry's color; in between, entries interpolate
    piecewise-linearly with entry i anchored at isovalue + i*delta_v/n.
    """
    a, r, g, b = _k.eval_transition_tf(float(v), tf.isovalue, 1.0 / tf.delta_v,
                                       tf.local_tf.n, tf.local_tf.alphas(),
                                       tf.local_tf.colors())
    return (r, g, b, a)


def render_fvr(vol: ScalarVolume, cam: Camera, tf: TransitionalTF1D,
               sample_dist: float, crop: CropBounds | None = None,
               background=(0.0, 0.0, 0.0), shading: bool = False,
               lights=DEFAULT_LIGHTS,
               shading_params: ShadingParams = ShadingParams()) -> np.ndarray:
    """Front-to-back composited image, early-terminated at accumulated alpha 0.999.

    Opacity is rescaled from the reference sample distance via transparency
    exponentiation; emission-absorption only unless ``shading`` is set.
    """
    if sample_dist <= 0.0:
        raise ConfigError(f"sample_dist must be > 0, got {sample_dist}")
    if crop is None:
        crop = CropBounds.full(vol)
    w, h = cam.image_dims
    right, up_v, fwd, half_w, half_h = cam.basis()
    out = np.empty((h, w, 3), dtype=np.float64)
    ldirs, lcols = lights_arrays(lights)
    sx, sy, sz = vol.spacing
    _k.render_fvr_tiles(
        vol.grid, sx, sy, sz,
        crop.lo[0], crop.lo[1], crop.lo[2], crop.hi[0], crop.hi[1], crop.hi[2],
        float(cam.eye[0]), float(cam.eye[1]), float(cam.eye[2]),
        right[0], right[1], right[2], up_v[0], up_v[1], up_v[2],
        fwd[0], fwd[1], fwd[2], half_w, half_h, w, h,
        tf.isovalue, tf.delta_v, tf.local_tf.n,
        tf.local_tf.alphas(), tf.local_tf.colors(),
        tf.std_sample_distance, float(sample_dist),
        shading, shading_params.ambient, shading_params.diffuse,
        shading_params.specular, shading_params.shininess, ldirs, lcols,
        float(background[0]), float(background[1]), float(background[2]), out)
    return out
