"""Neighborhood-density color enhancement for isosurface hits.

A narrow transitional opacity ramp behind the surface is compressed into a
precomputed map from the local scalar changing rate ("speed", the rate divided
by a global density factor) to the fully accumulated material color. At render
time one rate estimate per hit replaces full volume compositing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as _k
from .camera import Ray
from .errors import ConfigError
from .raycast import Hit
from .volume import ScalarVolume

DEFAULT_ENTRIES = 16
DEFAULT_MAP_SIZE = 256
RATE_FLOOR = _k.RATE_FLOOR

#: finite stand-in for the speed -> infinity limit of the last map entry
_LIMIT_SPEED = 1e6


@dataclass(frozen=True)
class LocalTransferFunction:
    """Opacity/color entries spread evenly over [isovalue, isovalue + delta_v].

    Entry i (1-based) sits at scalar isovalue + i*delta_v/n; the last entry is
    fully opaque so accumulated colors always saturate.
    """

    entries: tuple[tuple[float, tuple[float, float, float]], ...]

    def __post_init__(self):
        if len(self.entries) < 1:
            raise ConfigError("transfer function needs at least one entry")
        norm = []
        for a, c in self.entries:
            if not 0.0 <= a <= 1.0:
                raise ConfigError(f"entry alpha {a} outside [0, 1]")
            if len(c) != 3 or any(not 0.0 <= x <= 1.0 for x in c):
                raise ConfigError(f"entry color {c} outside [0, 1]^3")
            norm.append((float(a), tuple(float(x) for x in c)))
        if norm[-1][0] != 1.0:
            raise ConfigError("last entry must be fully opaque (alpha 1)")
        object.__setattr__(self, "entries", tuple(norm))

    @property
    def n(self) -> int:
        return len(self.entries)

    def alphas(self) -> np.ndarray:
        return np.array([a for a, _ in self.entries])

    def colors(self) -> np.ndarray:
        return np.array([c for _, c in self.entries])

    @classmethod
    def ramp(cls, near: tuple[float, float, float], far: tuple[float, float, float],
             n: int = DEFAULT_ENTRIES) -> "LocalTransferFunction":
        """Linear alpha ramp blending from a near color to a far (opaque) color."""
        entries = []
        for i in range(1, n + 1):
            f = (i - 1) / max(n - 1, 1)
            color = tuple((1 - f) * np.asarray(near) + f * np.asarray(far))
            entries.append((i / n, color))
        return cls(tuple(entries))


@dataclass(frozen=True)
class EnhanceParams:
    """Tunable parameters of the color enhancement."""

    isovalue: float
    delta_v: float
    std_sample_distance: float
    mode: str = "shallow"
    deep_step: float | None = None
    deep_max_steps: int = 256
    literal_alpha: bool = False

    def __post_init__(self):
        if not 0.0 < self.isovalue < 1.0:
            raise ConfigError(f"isovalue must be in (0, 1), got {self.isovalue}")
        if self.delta_v <= 0.0:
            raise ConfigError(f"delta_v must be > 0, got {self.delta_v}")
        if self.std_sample_distance <= 0.0:
            raise ConfigError(f"std_sample_distance must be > 0, got {self.std_sample_distance}")
        if self.mode not in ("shallow", "deep"):
            raise ConfigError(f"mode must be 'shallow' or 'deep', got {self.mode!r}")
        if self.deep_step is not None and self.deep_step <= 0.0:
            raise ConfigError(f"deep_step must be > 0, got {self.deep_step}")
        if self.deep_max_steps < 1:
            raise ConfigError(f"deep_max_steps must be >= 1, got {self.deep_max_steps}")

    @property
    def density_factor(self) -> float:
        return self.delta_v / self.std_sample_distance

    def resolved_deep_step(self, vol: ScalarVolume) -> float:
        if self.deep_step is not None:
            return self.deep_step
        return 0.5 * min(vol.spacing)


@dataclass(frozen=True)
class SpeedColorMap:
    """Log-sampled map from speed to accumulated color.

    Entry j (1-based) holds the accumulation at speed -ln(1 - j/m); the last
    entry carries the speed -> infinity limit.
    """

    m: int
    colors: np.ndarray  # (m, 3)

    def __post_init__(self):
        if self.m < 2:
            raise ConfigError(f"map size must be >= 2, got {self.m}")
        c = np.ascontiguousarray(self.colors, dtype=np.float64)
        if c.shape != (self.m, 3):
            raise ConfigError(f"colors must have shape ({self.m}, 3)")
        c.setflags(write=False)
        object.__setattr__(self, "colors", c)


@dataclass(frozen=True)
class MaterialSample:
    """Rate/speed/color triple resolved for one isosurface hit."""

    rate: float
    speed: float
    color: np.ndarray


def per_sample_alpha(alpha_t: float, speed: float, n: int,
                     literal: bool = False) -> float:
    """Opacity of one of n evenly spread samples, corrected for the local speed.

    The default transparency form 1 - (1 - alpha_t)^(1/(n*speed)) grows as the
    neighborhood thickens (speed drops); ``literal`` selects the plain
    exponentiation alpha_t^(1/(n*speed)) for comparison.
    """
    if speed <= 0.0:
        raise ConfigError(f"speed must be > 0, got {speed}")
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    e = 1.0 / (n * speed)
    if literal:
        return float(alpha_t ** e)
    if alpha_t >= 1.0:
        return 1.0
    return float(1.0 - (1.0 - alpha_t) ** e)


def accumulate_color(tf: LocalTransferFunction, speed: float,
                     literal: bool = False) -> np.ndarray:
    """Front-to-back blend of the n corrected samples, nearest entry first."""
    acc = np.zeros(3)
    trans = 1.0
    for a_t, color in tf.entries:
        a = per_sample_alpha(a_t, speed, tf.n, literal=literal)
        acc += trans * a * np.asarray(color)
        trans *= 1.0 - a
    return acc


def build_speed_color_map(tf: LocalTransferFunction, m: int = DEFAULT_MAP_SIZE,
                          literal: bool = False) -> SpeedColorMap:
    """Precompute accumulated colors at the log-sampled speeds -ln(1 - j/m)."""
    if m < 2:
        raise ConfigError(f"map size must be >= 2, got {m}")
    colors = np.empty((m, 3))
    for j in range(1, m):
        colors[j - 1] = accumulate_color(tf, -math.log(1.0 - j / m), literal=literal)
    colors[m - 1] = accumulate_color(tf, _LIMIT_SPEED, literal=literal)
    return SpeedColorMap(m=m, colors=colors)


def lookup_color(smap: SpeedColorMap, speed: float) -> np.ndarray:
    """Nearest map entry for a speed; exact at the sampled speeds."""
    if speed <= 0.0:
        raise ConfigError(f"speed must be > 0, got {speed}")
    j = _k.speed_to_index(float(speed), smap.m)
    return smap.colors[j - 1].copy()


def rate_shallow(gradient, ray_dir) -> float:
    """|gradient . ray_dir| floored away from zero (grazing incidence)."""
    g = np.asarray(gradient, dtype=np.float64)
    d = np.asarray(ray_dir, dtype=np.float64)
    return max(abs(float(g @ d)), RATE_FLOOR)


def rate_deep(vol: ScalarVolume, hit: Hit, ray: Ray, params: EnhanceParams) -> float:
    """Scalar changing rate from an iterative search to isovalue + delta_v.

    Marches along the viewing ray from the hit in deep_step increments until
    the sampled value reaches the target (sub-step crossing interpolated
    linearly); never reaching it within the budget clamps to the minimum rate.
    """
    step = params.resolved_deep_step(vol)
    sx, sy, sz = vol.spacing
    rate = _k.deep_rate(vol.grid, sx, sy, sz,
                        float(hit.position[0]), float(hit.position[1]), float(hit.position[2]),
                        float(ray.dir[0]), float(ray.dir[1]), float(ray.dir[2]),
                        params.isovalue + params.delta_v, params.delta_v,
                        step, params.deep_max_steps)
    return max(float(rate), RATE_FLOOR)


def material_sample(vol: ScalarVolume, hit: Hit, ray: Ray,
                    params: EnhanceParams, smap: SpeedColorMap) -> MaterialSample:
    """Resolve the enhancement color for a hit using the configured mode."""
    if params.mode == "shallow":
        from .volume import gradient_central
        rate = rate_shallow(gradient_central(vol, hit.position), ray.dir)
    else:
        rate = rate_deep(vol, hit, ray, params)
    speed = rate / params.density_factor
    return MaterialSample(rate=rate, speed=speed, color=lookup_color(smap, speed))


@dataclass(frozen=True)
class Light:
    """Directional light; direction points from the surface toward the light."""

    direction: tuple[float, float, float]
    color: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def unit_direction(self) -> np.ndarray:
        d = np.asarray(self.direction, dtype=np.float64)
        return d / np.linalg.norm(d)


@dataclass(frozen=True)
class ShadingParams:
    ambient: float = 0.15
    diffuse: float = 0.7
    specular: float = 0.15
    shininess: float = 32.0


DEFAULT_LIGHTS = (Light(direction=(0.4, 0.55, 0.8)),)


def lights_arrays(lights) -> tuple[np.ndarray, np.ndarray]:
    dirs = np.array([l.unit_direction() for l in lights], dtype=np.float64)
    cols = np.array([l.color for l in lights], dtype=np.float64)
    return dirs, cols


def shade(hit: Hit, material, gradient, lights, ray: Ray,
          params: ShadingParams = ShadingParams()) -> np.ndarray:
    """Blinn-Phong, normal from the (negated, viewer-facing) gradient.

    A zero gradient degenerates to the ambient term alone.
    """
    dirs, cols = lights_arrays(lights)
    m = np.asarray(material, dtype=np.float64)
    g = np.asarray(gradient, dtype=np.float64)
    r, gg, b = _k.blinn_phong(float(m[0]), float(m[1]), float(m[2]),
                              float(g[0]), float(g[1]), float(g[2]),
                              float(ray.dir[0]), float(ray.dir[1]), float(ray.dir[2]),
                              dirs, cols, params.ambient, params.diffuse,
                              params.specular, params.shininess)
    return np.array([r, gg, b])


# ---------------------------------------------------------------------------
# Wire format


def tf_to_json_dict(tf: LocalTransferFunction, params: EnhanceParams) -> dict:
    d = {
        "isovalue": params.isovalue,
        "delta_v": params.delta_v,
        "std_sample_distance": params.std_sample_distance,
        "entries": [{"alpha": a, "rgb": list(c)} for a, c in tf.entries],
        "mode": params.mode,
    }
    if params.deep_step is not None:
        d["deep_step"] = params.deep_step
    if params.deep_max_steps != 256:
        d["deep_max_steps"] = params.deep_max_steps
    return d


def tf_from_json_dict(d: dict, isovalue: float | None = None
                      ) -> tuple[LocalTransferFunction, EnhanceParams]:
    """Parse the transfer-function JSON; an explicit isovalue overrides the file."""
    try:
        entries = tuple((e["alpha"], tuple(e["rgb"])) for e in d["entries"])
        tf = LocalTransferFunction(entries)
        params = EnhanceParams(
            isovalue=float(isovalue if isovalue is not None else d["isovalue"]),
            delta_v=float(d["delta_v"]),
            std_sample_distance=float(d["std_sample_distance"]),
            mode=d.get("mode", "shallow"),
            deep_step=d.get("deep_step"),
            deep_max_steps=int(d.get("deep_max_steps", 256)),
        )
    except KeyError as exc:
        raise ConfigError(f"transfer-function JSON missing field {exc}") from exc
    return tf, params


def load_tf(path: str | Path, isovalue: float | None = None
            ) -> tuple[LocalTransferFunction, EnhanceParams]:
    return tf_from_json_dict(json.loads(Path(path).read_text()), isovalue)
