"""Image-space interaction: peel windows, voxel-ID picking, seed sets."""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

MISS = -1

HIGHLIGHT_FG = np.array([1.0, 0.45, 0.15])
HIGHLIGHT_BG = np.array([0.2, 0.55, 1.0])


@dataclass(frozen=True)
class PeelWindow:
    """Axis-aligned pixel rectangle; clamped to the image on rasterization."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 0 or self.h < 0:
            raise ConfigError(f"peel window extent must be >= 0, got {self.w}x{self.h}")


class PeelBuffer:
    """Per-pixel skip counts; a crossing is skipped while its index <= the count."""

    def __init__(self, counts: np.ndarray):
        self.counts = np.ascontiguousarray(counts, dtype=np.int32)

    @classmethod
    def zeros(cls, image_dims: tuple[int, int]) -> "PeelBuffer":
        w, h = image_dims
        return cls(np.zeros((h, w), dtype=np.int32))

    @property
    def image_dims(self) -> tuple[int, int]:
        h, w = self.counts.shape
        return (w, h)


def build_peel_buffer(windows, image_dims: tuple[int, int]) -> PeelBuffer:
    """Count covering windows per pixel; overlapping windows sum."""
    w, h = image_dims
    counts = np.zeros((h, w), dtype=np.int32)
    for win in windows:
        x0 = min(max(win.x, 0), w)
        y0 = min(max(win.y, 0), h)
        x1 = min(max(win.x + win.w, 0), w)
        y1 = min(max(win.y + win.h, 0), h)
        counts[y0:y1, x0:x1] += 1
    return PeelBuffer(counts)


class VoxelIdBuffer:
    """Per-pixel linear cell id of the returned hit; MISS (-1) where none."""

    def __init__(self, ids: np.ndarray):
        self.ids = np.ascontiguousarray(ids, dtype=np.int32)

    @classmethod
    def empty(cls, image_dims: tuple[int, int]) -> "VoxelIdBuffer":
        w, h = image_dims
        return cls(np.full((h, w), MISS, dtype=np.int32))

    @property
    def image_dims(self) -> tuple[int, int]:
        h, w = self.ids.shape
        return (w, h)

    def at(self, px: tuple[int, int]) -> int:
        return int(self.ids[px[1], px[0]])


def pick_voxels(id_buffer: VoxelIdBuffer, pixels) -> set[int]:
    """Deduplicated cell ids under the given pixels; misses contribute nothing."""
    w, h = id_buffer.image_dims
    out: set[int] = set()
    for x, y in pixels:
        if not (0 <= x < w and 0 <= y < h):
            raise ConfigError(f"pixel ({x}, {y}) outside image {w}x{h}")
        v = int(id_buffer.ids[y, x])
        if v != MISS:
            out.add(v)
    return out


class SeedSets:
    """Disjoint foreground/background cell-id sets, kept sorted for searching."""

    def __init__(self, foreground=(), background=()):
        fg = set(int(c) for c in foreground)
        bg = set(int(c) for c in background)
        if fg & bg:
            raise ConfigError(f"seed sets overlap: {sorted(fg & bg)[:5]}")
        self._fg = fg
        self._bg = bg
        self._rebuild()

    def _rebuild(self):
        self.foreground: tuple[int, ...] = tuple(sorted(self._fg))
        self.background: tuple[int, ...] = tuple(sorted(self._bg))

    def add(self, cells, target: str) -> list[int]:
        """Add cells to one side, removing them from the other; returns added ids."""
        if target not in ("fg", "bg"):
            raise ConfigError(f"target must be 'fg' or 'bg', got {target!r}")
        dst, other = (self._fg, self._bg) if target == "fg" else (self._bg, self._fg)
        added = []
        for c in cells:
            c = int(c)
            other.discard(c)
            if c not in dst:
                dst.add(c)
                added.append(c)
        self._rebuild()
        return sorted(added)

    def remove(self, cells) -> None:
        for c in cells:
            self._fg.discard(int(c))
            self._bg.discard(int(c))
        self._rebuild()

    def clear(self) -> None:
        self._fg.clear()
        self._bg.clear()
        self._rebuild()

    @staticmethod
    def _contains(sorted_ids: tuple[int, ...], cell_id: int) -> bool:
        i = bisect_left(sorted_ids, cell_id)
        return i < len(sorted_ids) and sorted_ids[i] == cell_id

    def in_foreground(self, cell_id: int) -> bool:
        return self._contains(self.foreground, int(cell_id))

    def in_background(self, cell_id: int) -> bool:
        return self._contains(self.background, int(cell_id))


def selection_color(cell_id: int, seeds: SeedSets, base) -> np.ndarray:
    """Preview color: highlight seeds, pass everything else through."""
    if seeds.in_foreground(cell_id):
        return HIGHLIGHT_FG.copy()
    if seeds.in_background(cell_id):
        return HIGHLIGHT_BG.copy()
    return np.asarray(base, dtype=np.float64).copy()
