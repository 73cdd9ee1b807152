"""Pinhole camera model and per-pixel ray generation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n < 1e-12:
        raise ConfigError("zero-length direction vector")
    return v / n


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    dir: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64))
        d = np.asarray(self.dir, dtype=np.float64)
        n = float(np.linalg.norm(d))
        if abs(n - 1.0) > 1e-9:
            d = d / n
        object.__setattr__(self, "dir", d)

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.dir


@dataclass(frozen=True)
class Camera:
    """Pinhole camera; image rows run top to bottom."""

    eye: tuple[float, float, float]
    look_at: tuple[float, float, float]
    up: tuple[float, float, float] = (0.0, 1.0, 0.0)
    vfov_deg: float = 40.0
    image_dims: tuple[int, int] = (512, 512)

    def __post_init__(self):
        if not 0.0 < self.vfov_deg < 180.0:
            raise ConfigError(f"vfov_deg must be in (0, 180), got {self.vfov_deg}")
        if self.image_dims[0] < 1 or self.image_dims[1] < 1:
            raise ConfigError(f"image_dims must be >= 1, got {self.image_dims}")
        fwd = np.asarray(self.look_at, dtype=np.float64) - np.asarray(self.eye, dtype=np.float64)
        if np.linalg.norm(np.cross(fwd, np.asarray(self.up, dtype=np.float64))) < 1e-12:
            raise ConfigError("view direction must not be parallel to up")

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, float, float]:
        """(right, up, forward) unit vectors plus image-plane half extents."""
        eye = np.asarray(self.eye, dtype=np.float64)
        fwd = _unit(np.asarray(self.look_at, dtype=np.float64) - eye)
        right = _unit(np.cross(fwd, np.asarray(self.up, dtype=np.float64)))
        up_v = np.cross(right, fwd)
        half_h = math.tan(math.radians(self.vfov_deg) * 0.5)
        half_w = half_h * self.image_dims[0] / self.image_dims[1]
        return right, up_v, fwd, half_w, half_h

    def to_json_dict(self) -> dict:
        return {
            "eye": list(self.eye), "look_at": list(self.look_at),
            "up": list(self.up), "vfov_deg": self.vfov_deg,
            "image_dims": list(self.image_dims),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Camera":
        return cls(eye=tuple(d["eye"]), look_at=tuple(d["look_at"]),
                   up=tuple(d.get("up", (0.0, 1.0, 0.0))),
                   vfov_deg=float(d.get("vfov_deg", d.get("vfov", 40.0))),
                   image_dims=tuple(d.get("image_dims", (512, 512))))


def pixel_ray(camera: Camera, px: tuple[float, float]) -> Ray:
    """Ray through the center of pixel (x, y); (0, 0) is the top-left pixel."""
    w, h = camera.image_dims
    if not (0 <= px[0] < w and 0 <= px[1] < h):
        raise ConfigError(f"pixel {px} outside image {camera.image_dims}")
    right, up_v, fwd, half_w, half_h = camera.basis()
    ndc_x = (px[0] + 0.5) / w * 2.0 - 1.0
    ndc_y = 1.0 - (px[1] + 0.5) / h * 2.0
    d = fwd + ndc_x * half_w * right + ndc_y * half_h * up_v
    return Ray(np.asarray(camera.eye, dtype=np.float64), d)


def frame_volume(extent: tuple[float, float, float],
                 image_dims: tuple[int, int] = (512, 512),
                 direction: tuple[float, float, float] = (0.55, -0.4, 1.0),
                 vfov_deg: float = 40.0,
                 distance_factor: float = 1.6) -> Camera:
    """Default camera looking at the volume center from a diagonal offset."""
    center = np.asarray(extent, dtype=np.float64) * 0.5
    d = _unit(np.asarray(direction, dtype=np.float64))
    dist = distance_factor * float(np.linalg.norm(center) * 2.0)
    eye = center + d * dist
    up = (0.0, 1.0, 0.0)
    if abs(d[1]) > 0.95:
        up = (0.0, 0.0, 1.0)
    return Camera(eye=tuple(eye), look_at=tuple(center), up=up,
                  vfov_deg=vfov_deg, image_dims=tuple(image_dims))
