"""Voxel-exact ray traversal and cubic isosurface intersection.

Traversal walks every cell the ray passes through inside a crop box, front to
back, with t ranges that tile the clipped segment exactly. Within a cell the
trilinear field restricted to the ray is a cubic in the ray parameter; it is
reconstructed from four samples (segment ends plus the two trisection points)
and intersected against the isovalue by monotone-span root isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels as _k
from .camera import Ray
from .errors import ConfigError
from .volume import ScalarVolume

# one crossing per cell face at most is resolvable; closer roots are duplicates
_DUP_ROOT_EPS = 1e-12


@dataclass(frozen=True)
class CropBounds:
    """Inclusive-lo / exclusive-hi cell-index box restricting traversal."""

    lo: tuple[int, int, int]
    hi: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(int(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(int(v) for v in self.hi))
        if any(l >= h for l, h in zip(self.lo, self.hi)):
            raise ConfigError(f"crop lo must be < hi per axis, got {self.lo}..{self.hi}")
        if any(l < 0 for l in self.lo):
            raise ConfigError(f"crop lo must be >= 0, got {self.lo}")

    @classmethod
    def full(cls, vol: ScalarVolume) -> "CropBounds":
        return cls((0, 0, 0), vol.cell_dims)

    def clamped(self, vol: ScalarVolume) -> "CropBounds":
        cd = vol.cell_dims
        return CropBounds(tuple(min(max(l, 0), cd[i] - 1) for i, l in enumerate(self.lo)),
                          tuple(min(max(h, 1), cd[i]) for i, h in enumerate(self.hi)))

    def contains_cell(self, cell: tuple[int, int, int]) -> bool:
        return all(self.lo[i] <= cell[i] < self.hi[i] for i in range(3))


@dataclass(frozen=True)
class CellStep:
    cell_index: tuple[int, int, int]
    t_enter: float
    t_exit: float


@dataclass(frozen=True)
class CubicPoly:
    """v(u) = c0 + c1*u + c2*u^2 + c3*u^3 over the normalized segment u in [0,1]."""

    c0: float
    c1: float
    c2: float
    c3: float

    def __call__(self, u: float) -> float:
        return ((self.c3 * u + self.c2) * u + self.c1) * u + self.c0


@dataclass(frozen=True)
class Hit:
    t: float
    position: np.ndarray
    cell_index: tuple[int, int, int]
    cell_id: int
    crossings_skipped: int
    structure_id: int = 0


def linear_cell_id(cell_index: tuple[int, int, int],
                   cell_dims: tuple[int, int, int]) -> int:
    """Sequential cell id, x-fastest; bijective with the index triple."""
    ix, iy, iz = (int(v) for v in cell_index)
    cx, cy, cz = (int(v) for v in cell_dims)
    if not (0 <= ix < cx and 0 <= iy < cy and 0 <= iz < cz):
        raise ValueError(f"cell index {cell_index} outside cell grid {cell_dims}")
    return ix + iy * cx + iz * cx * cy


def cell_index_from_id(cell_id: int, cell_dims: tuple[int, int, int]) -> tuple[int, int, int]:
    cx, cy, cz = (int(v) for v in cell_dims)
    if not 0 <= cell_id < cx * cy * cz:
        raise ValueError(f"cell id {cell_id} outside cell grid {cell_dims}")
    iz, rem = divmod(int(cell_id), cx * cy)
    iy, ix = divmod(rem, cx)
    return (ix, iy, iz)


def traverse_cells(ray: Ray, vol: ScalarVolume,
                   crop: CropBounds | None = None) -> Iterator[CellStep]:
    """Yield every cell whose interior the clipped ray crosses, in t order.

    Consecutive steps chain exactly: each step's t_exit is the next step's
    t_enter, and the union of ranges equals the ray/crop-box overlap.
    """
    if crop is None:
        crop = CropBounds.full(vol)
    sx, sy, sz = vol.spacing
    (lox, loy, loz), (hix, hiy, hiz) = crop.lo, crop.hi
    ox, oy, oz = (float(v) for v in ray.origin)
    dx, dy, dz = (float(v) for v in ray.dir)
    t0, t1 = _k.ray_box(ox, oy, oz, dx, dy, dz,
                        lox * sx, loy * sy, loz * sz,
                        hix * sx, hiy * sy, hiz * sz)
    t0 = max(t0, 0.0)
    if t1 <= t0:
        return
    diag = math.sqrt(sx * sx + sy * sy + sz * sz)
    eps = 1e-9 * diag
    ix = min(max(int(math.floor((ox + (t0 + eps) * dx) / sx)), lox), hix - 1)
    iy = min(max(int(math.floor((oy + (t0 + eps) * dy) / sy)), loy), hiy - 1)
    iz = min(max(int(math.floor((oz + (t0 + eps) * dz) / sz)), loz), hiz - 1)

    def axis_setup(d, o, i, s):
        if d > 0.0:
            return ((i + 1) * s - o) / d, s / d, 1
        if d < 0.0:
            return (i * s - o) / d, -s / d, -1
        return 1e300, 1e300, 0

    tmx, tdx, stx = axis_setup(dx, ox, ix, sx)
    tmy, tdy, sty = axis_setup(dy, oy, iy, sy)
    tmz, tdz, stz = axis_setup(dz, oz, iz, sz)
    tcur = t0
    max_steps = (hix - lox) + (hiy - loy) + (hiz - loz) + 3
    for _ in range(max_steps):
        tnext = min(tmx, tmy, tmz)
        texit = min(tnext, t1)
        if texit > tcur:
            yield CellStep((ix, iy, iz), tcur, texit)
        if tnext >= t1:
            return
        if tmx == tnext:
            ix += stx
            tmx += tdx
            if ix < lox or ix >= hix:
                return
        if tmy == tnext:
            iy += sty
            tmy += tdy
            if iy < loy or iy >= hiy:
                return
        if tmz == tnext:
            iz += stz
            tmz += tdz
            if iz < loz or iz >= hiz:
                return
        tcur = tnext


def cubic_from_samples(v0: float, v1: float, v2: float, v3: float) -> CubicPoly:
    """Interpolating cubic through samples at u = 0, 1/3, 2/3, 1."""
    c0, c1, c2, c3 = _k.cubic_fit(float(v0), float(v1), float(v2), float(v3))
    return CubicPoly(c0, c1, c2, c3)


def cubic_roots(poly: CubicPoly, iso: float,
                u_lo: float = 0.0, u_hi: float = 1.0) -> list[float]:
    """All u in [u_lo, u_hi] with poly(u) = iso, ascending."""
    out = np.empty(4, dtype=np.float64)
    n = _k.cubic_roots(poly.c0, poly.c1, poly.c2, poly.c3,
                       float(iso), float(u_lo), float(u_hi), out)
    return [float(out[i]) for i in range(n)]


def first_root(poly: CubicPoly, iso: float,
               u_lo: float = 0.0, u_hi: float = 1.0) -> float | None:
    """Smallest u in [u_lo, u_hi] with poly(u) = iso, or None without a crossing."""
    if not 0.0 <= u_lo < u_hi <= 1.0:
        raise ConfigError(f"need 0 <= u_lo < u_hi <= 1, got {u_lo}, {u_hi}")
    roots = cubic_roots(poly, iso, u_lo, u_hi)
    return roots[0] if roots else None


def intersect_isosurface(ray: Ray, vol: ScalarVolume, iso: float,
                         crop: CropBounds | None = None,
                         skip: int = 0) -> Hit | None:
    """The (skip+1)-th isosurface crossing along the ray, if any.

    Crossings are counted globally in t order; multiple roots inside one cell
    each count. Cells whose corner values cannot straddle the isovalue are
    rejected without sampling.
    """
    if skip < 0:
        raise ConfigError(f"skip must be >= 0, got {skip}")
    if crop is None:
        crop = CropBounds.full(vol)
    bounds4 = vol.cell_bounds_packed()
    sx, sy, sz = vol.spacing
    diag = math.sqrt(sx * sx + sy * sy + sz * sz)
    cell_dims = vol.cell_dims
    ncross = 0
    last_t = -math.inf
    for step in traverse_cells(ray, vol, crop):
        ix, iy, iz = step.cell_index
        if not (bounds4[iz, iy, ix, 0] <= iso <= bounds4[iz, iy, ix, 1]):
            continue
        dt = step.t_exit - step.t_enter
        samples = [
            float(_k.trilinear(vol.grid, sx, sy, sz, *ray.at(step.t_enter + u * dt)))
            for u in (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0)
        ]
        poly = cubic_from_samples(*samples)
        for u in cubic_roots(poly, iso, 0.0, 1.0):
            if u >= 1.0 - _DUP_ROOT_EPS:
                continue  # owned by the next cell at u = 0
            t = step.t_enter + u * dt
            if t <= last_t + 1e-9 * diag:
                continue
            ncross += 1
            last_t = t
            if ncross > skip:
                return Hit(t=t, position=ray.at(t), cell_index=(ix, iy, iz),
                           cell_id=linear_cell_id((ix, iy, iz), cell_dims),
                           crossings_skipped=skip, structure_id=0)
    return None
