"""Scalar volume storage, raw-file I/O, sampling, and synthetic phantoms.

A volume is a regular grid of scalars normalized into [0,1] on load, stored
x-fastest. Grid point (i,j,k) sits at world position (i*sx, j*sy, k*sz); the
cell (i,j,k) is the cube spanned by grid points (i..i+1, j..j+1, k..k+1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as _k
from .errors import ConfigError, FormatError

_DTYPES = {"u8": ("<u1", 1), "u16le": ("<u2", 2), "f32le": ("<f4", 4)}

SYNTHETIC_KINDS = ("sphere", "two-spheres", "dumbbell", "ramp",
                   "nested-spheres", "shell-with-inclusions")


@dataclass(frozen=True)
class VolumeMeta:
    """Grid geometry and raw-file interpretation for a scalar volume."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    source_dtype: str = "f32le"
    value_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if len(self.dims) != 3 or any(int(d) < 2 for d in self.dims):
            raise ConfigError(f"dims must be three integers >= 2, got {self.dims}")
        if len(self.spacing) != 3 or any(s <= 0 for s in self.spacing):
            raise ConfigError(f"spacing must be three positive reals, got {self.spacing}")
        if self.source_dtype not in _DTYPES:
            raise ConfigError(f"unknown dtype {self.source_dtype!r}; expected one of {sorted(_DTYPES)}")
        if not self.value_range[0] < self.value_range[1]:
            raise ConfigError(f"value_range min must be < max, got {self.value_range}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "value_range",
                           (float(self.value_range[0]), float(self.value_range[1])))

    @property
    def cell_dims(self) -> tuple[int, int, int]:
        return (self.dims[0] - 1, self.dims[1] - 1, self.dims[2] - 1)

    @property
    def extent(self) -> tuple[float, float, float]:
        """World size of the grid per axis."""
        return tuple((d - 1) * s for d, s in zip(self.dims, self.spacing))

    def to_json_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "spacing": list(self.spacing),
            "dtype": self.source_dtype,
            "value_range": list(self.value_range),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "VolumeMeta":
        return cls(dims=tuple(d["dims"]), spacing=tuple(d["spacing"]),
                   source_dtype=d.get("dtype", "f32le"),
                   value_range=tuple(d.get("value_range", (0.0, 1.0))))


class ScalarVolume:
    """Immutable normalized scalar grid plus its metadata.

    ``grid`` is the (nz, ny, nx) float64 array; ``data`` views it flat in
    x-fastest order. Per-cell value bounds used for candidate-cell rejection
    are computed lazily and cached.
    """

    def __init__(self, meta: VolumeMeta, data: np.ndarray):
        nx, ny, nz = meta.dims
        flat = np.ascontiguousarray(data, dtype=np.float64).reshape(-1)
        if flat.size != nx * ny * nz:
            raise FormatError(
                f"data length {flat.size} != dims product {nx * ny * nz}")
        self.meta = meta
        self.grid = flat.reshape(nz, ny, nx)
        self.grid.setflags(write=False)
        self._cell_bounds: tuple[np.ndarray, np.ndarray] | None = None
        self._cell_bounds_packed: np.ndarray | None = None

    @property
    def data(self) -> np.ndarray:
        return self.grid.reshape(-1)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.meta.dims

    @property
    def spacing(self) -> tuple[float, float, float]:
        return self.meta.spacing

    @property
    def cell_dims(self) -> tuple[int, int, int]:
        return self.meta.cell_dims

    @property
    def extent(self) -> tuple[float, float, float]:
        return self.meta.extent

    def cell_value_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """(min, max) over the 8 corners of every cell, shape (ncz, ncy, ncx)."""
        if self._cell_bounds is None:
            g = self.grid
            lo = g[:-1, :-1, :-1]
            hi = g[:-1, :-1, :-1].copy()
            lo = np.minimum(lo, g[:-1, :-1, 1:])
            hi = np.maximum(hi, g[:-1, :-1, 1:])
            for dz in (0, 1):
                for dy in (0, 1):
                    for dx in (0, 1):
                        if dz == 0 and dy == 0:
                            continue
                        nz, ny, nx = g.shape
                        v = g[dz:nz - 1 + dz, dy:ny - 1 + dy, dx:nx - 1 + dx]
                        lo = np.minimum(lo, v)
                        hi = np.maximum(hi, v)
            self._cell_bounds = (np.ascontiguousarray(lo), np.ascontiguousarray(hi))
        return self._cell_bounds

    def cell_bounds_packed(self) -> np.ndarray:
        """Interleaved conservative float32 cell bounds, shape (ncz, ncy, ncx, 2).

        Rounded outward so a candidate test against them never loses a cell
        the exact bounds would keep; one cache line per cell on the render
        hot path.
        """
        if self._cell_bounds_packed is None:
            lo, hi = self.cell_value_bounds()
            packed = np.empty(lo.shape + (2,), dtype=np.float32)
            packed[..., 0] = np.nextafter(lo.astype(np.float32), np.float32(-np.inf))
            packed[..., 1] = np.nextafter(hi.astype(np.float32), np.float32(np.inf))
            self._cell_bounds_packed = np.ascontiguousarray(packed)
        return self._cell_bounds_packed

    def cell_corner_values(self, cell_index: tuple[int, int, int]) -> np.ndarray:
        """The 8 corner scalars of a cell, x-fastest bit order (v000..v111)."""
        ix, iy, iz = cell_index
        g = self.grid
        return np.array([
            g[iz, iy, ix], g[iz, iy, ix + 1],
            g[iz, iy + 1, ix], g[iz, iy + 1, ix + 1],
            g[iz + 1, iy, ix], g[iz + 1, iy, ix + 1],
            g[iz + 1, iy + 1, ix], g[iz + 1, iy + 1, ix + 1],
        ])


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a deterministic test phantom.

    ``params`` are kind-specific fractions of the volume extent (centers use
    the per-axis extent, radii the smallest extent); an empty tuple selects
    the kind's defaults. ``spacing`` defaults to 1/(max(dims)-1) per axis so
    the longest side spans one world unit.
    """

    kind: str
    dims: tuple[int, int, int]
    params: tuple[float, ...] = ()
    spacing: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.kind not in SYNTHETIC_KINDS:
            raise ConfigError(
                f"unknown synthetic kind {self.kind!r}; expected one of {SYNTHETIC_KINDS}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))


def load_volume(raw_path: str | Path, meta: VolumeMeta) -> ScalarVolume:
    """Read a tightly packed little-endian raw file and normalize into [0,1]."""
    np_dtype, width = _DTYPES[meta.source_dtype]
    nvox = meta.dims[0] * meta.dims[1] * meta.dims[2]
    raw = Path(raw_path).read_bytes()
    expected = nvox * width
    if len(raw) != expected:
        raise FormatError(
            f"{raw_path}: file size {len(raw)} != expected {expected} "
            f"({meta.dims[0]}x{meta.dims[1]}x{meta.dims[2]} {meta.source_dtype})")
    values = np.frombuffer(raw, dtype=np_dtype).astype(np.float64)
    lo, hi = meta.value_range
    values = np.clip((values - lo) / (hi - lo), 0.0, 1.0)
    return ScalarVolume(meta, values)


def save_volume_pair(vol: ScalarVolume, base_path: str | Path) -> tuple[Path, Path]:
    """Write the <name>.raw / <name>.json volume pair (f32le, value_range [0,1])."""
    base = Path(base_path)
    if base.suffix == ".raw":
        base = base.with_suffix("")
    raw_path = base.with_suffix(".raw")
    json_path = base.with_suffix(".json")
    meta = VolumeMeta(dims=vol.meta.dims, spacing=vol.meta.spacing,
                      source_dtype="f32le", value_range=(0.0, 1.0))
    vol.data.astype("<f4").tofile(raw_path)
    json_path.write_text(json.dumps(meta.to_json_dict(), indent=2))
    return raw_path, json_path


def load_volume_pair(base_path: str | Path) -> ScalarVolume:
    """Load a volume from its <name>.raw / <name>.json pair."""
    base = Path(base_path)
    if base.suffix == ".raw":
        base = base.with_suffix("")
    meta = VolumeMeta.from_json_dict(json.loads(base.with_suffix(".json").read_text()))
    return load_volume(base.with_suffix(".raw"), meta)


def sample_trilinear(vol: ScalarVolume, pos) -> float:
    """Trilinear interpolation at a world point; out-of-bounds positions clamp."""
    sx, sy, sz = vol.spacing
    return float(_k.trilinear(vol.grid, sx, sy, sz,
                              float(pos[0]), float(pos[1]), float(pos[2])))


def gradient_central(vol: ScalarVolume, pos) -> np.ndarray:
    """Central-difference gradient (one grid step stencil), scalar per world unit."""
    sx, sy, sz = vol.spacing
    g = _k.gradient(vol.grid, sx, sy, sz,
                    float(pos[0]), float(pos[1]), float(pos[2]))
    return np.array(g)


def _default_spacing(dims: tuple[int, int, int]) -> tuple[float, float, float]:
    s = 1.0 / (max(dims) - 1)
    return (s, s, s)


def _radial(coords, center, extent):
    X, Y, Z = coords
    cx, cy, cz = (center[0] * extent[0], center[1] * extent[1], center[2] * extent[2])
    return np.sqrt((X - cx) ** 2 + (Y - cy) ** 2 + (Z - cz) ** 2)


def _sphere_field(coords, extent, scale, cx, cy, cz, r):
    # linear radial profile: 1 at the center, 0.5 exactly at radius r
    d = _radial(coords, (cx, cy, cz), extent)
    return np.clip(1.0 - d / (2.0 * r * scale), 0.0, 1.0)


def _segment_distance(coords, extent, a, b):
    X, Y, Z = coords
    ax, ay, az = (a[0] * extent[0], a[1] * extent[1], a[2] * extent[2])
    bx, by, bz = (b[0] * extent[0], b[1] * extent[1], b[2] * extent[2])
    vx, vy, vz = bx - ax, by - ay, bz - az
    vv = vx * vx + vy * vy + vz * vz
    t = ((X - ax) * vx + (Y - ay) * vy + (Z - az) * vz) / vv
    t = np.clip(t, 0.0, 1.0)
    return np.sqrt((X - (ax + t * vx)) ** 2 + (Y - (ay + t * vy)) ** 2
                   + (Z - (az + t * vz)) ** 2)


def generate_synthetic(spec: SyntheticSpec) -> ScalarVolume:
    """Deterministic phantom volume for the given spec.

    Kinds and their params (all fractions of the extent):
      sphere                [cx, cy, cz, r]
      two-spheres           [cx1, cy1, cz1, r1, cx2, cy2, cz2, r2]
      dumbbell              [cx1, cy1, cz1, cx2, cy2, cz2, R, r_neck]
      ramp                  [axis] (0=x, 1=y, 2=z)
      nested-spheres        [cx, cy, cz, r_in, r_out, peak]  (peak in (0.5, 1])
      shell-with-inclusions [cx, cy, cz, r_in, r_out, peak, (x, y, z, r, density)...]
    """
    nx, ny, nz = spec.dims
    spacing = spec.spacing or _default_spacing(spec.dims)
    meta = VolumeMeta(dims=spec.dims, spacing=spacing,
                      source_dtype="f32le", value_range=(0.0, 1.0))
    extent = meta.extent
    scale = min(extent)
    xs = np.arange(nx) * spacing[0]
    ys = np.arange(ny) * spacing[1]
    zs = np.arange(nz) * spacing[2]
    Z, Y, X = np.meshgrid(zs, ys, xs, indexing="ij")
    coords = (X, Y, Z)
    p = spec.params

    if spec.kind == "ramp":
        axis = int(p[0]) if p else 2
        if axis not in (0, 1, 2):
            raise ConfigError(f"ramp axis must be 0, 1 or 2, got {axis}")
        field_ = coords[axis] / extent[axis]
    elif spec.kind == "sphere":
        cx, cy, cz, r = p if p else (0.5, 0.5, 0.5, 0.3)
        field_ = _sphere_field(coords, extent, scale, cx, cy, cz, r)
    elif spec.kind == "two-spheres":
        q = p if p else (0.32, 0.5, 0.5, 0.14, 0.68, 0.5, 0.5, 0.14)
        a = _sphere_field(coords, extent, scale, *q[0:4])
        b = _sphere_field(coords, extent, scale, *q[4:8])
        field_ = np.maximum(a, b)
    elif spec.kind == "dumbbell":
        q = p if p else (0.3, 0.5, 0.5, 0.7, 0.5, 0.5, 0.16, 0.07)
        c1, c2 = q[0:3], q[3:6]
        big_r, neck_r = q[6], q[7]
        a = _sphere_field(coords, extent, scale, *c1, big_r)
        b = _sphere_field(coords, extent, scale, *c2, big_r)
        dseg = _segment_distance(coords, extent, c1, c2)
        neck = np.clip(1.0 - dseg / (2.0 * neck_r * scale), 0.0, 1.0)
        field_ = np.maximum(np.maximum(a, b), neck)
    elif spec.kind in ("nested-spheres", "shell-with-inclusions"):
        q = p if p else ((0.5, 0.5, 0.5, 0.2, 0.32, 1.0)
                         if spec.kind == "nested-spheres"
                         else (0.5, 0.5, 0.5, 0.26, 0.34, 0.62,
                               0.42, 0.5, 0.5, 0.06, 0.95,
                               0.6, 0.55, 0.5, 0.05, 0.8))
        cx, cy, cz, r_in, r_out, peak = q[0:6]
        if not 0.5 < peak <= 1.0:
            raise ConfigError(f"shell peak must be in (0.5, 1], got {peak}")
        if not 0.0 < r_in < r_out:
            raise ConfigError(f"need 0 < r_in < r_out, got {r_in}, {r_out}")
        r_mid = 0.5 * (r_in + r_out) * scale
        half = 0.5 * (r_out - r_in) * scale
        # ramp width chosen so the 0.5 crossings land exactly on r_in / r_out
        width = half / (1.0 - 0.5 / peak)
        d = _radial(coords, (cx, cy, cz), extent)
        field_ = np.clip(peak * (1.0 - np.abs(d - r_mid) / width), 0.0, 1.0)
        rest = q[6:]
        if len(rest) % 5 != 0:
            raise ConfigError("inclusions must be (x, y, z, r, density) tuples")
        for k in range(0, len(rest), 5):
            bx, by, bz, br, dens = rest[k:k + 5]
            d = _radial(coords, (bx, by, bz), extent)
            blob = dens * np.clip(1.0 - d / (2.0 * br * scale), 0.0, 1.0)
            field_ = np.maximum(field_, blob)
    else:  # pragma: no cover - guarded by SyntheticSpec
        raise ConfigError(f"unknown synthetic kind {spec.kind!r}")

    return ScalarVolume(meta, field_)
