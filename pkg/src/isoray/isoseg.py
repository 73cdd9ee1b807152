"""Isosurface-domain segmentation.

Cells crossed by the isosurface form a 6-connected graph; the weight of an
edge is the arc length of the isosurface's contour on the shared cell face,
so a minimum cut between two seed sets is the geometrically shortest tear
through the surface. Only the voxels containing the surface participate,
which keeps the graphs small compared to the full volume.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit, prange

from . import _maxflow
from .errors import ConfigError, SeedError
from .explore import SeedSets
from .raycast import CropBounds
from .volume import ScalarVolume

#: marching-squares sub-grid used for face weights
FACE_SUBDIV = 64


def cell_contains_iso(corner_values, iso: float) -> bool:
    """Half-open straddle test: min(corners) < iso <= max(corners)."""
    v = np.asarray(corner_values, dtype=np.float64)
    return bool(v.min() < iso <= v.max())


@njit(cache=True)
def _ms_face_length(v00, v10, v01, v11, iso, fw, fh, sub):
    """Marching-squares contour length of the bilinear face interpolant.

    Runs on a sub x sub grid with linear edge crossings; rows that cannot
    contain the contour are rejected from their band extrema. Two-branch
    (saddle) faces return half the summed length.
    """
    # bilinear f(x, y) = a + b x + c y + d x y on the unit square
    a = v00
    b = v10 - v00
    c = v01 - v00
    d = v00 + v11 - v10 - v01
    # saddle decider for ambiguous sub-cells: critical value of f
    has_saddle = abs(d) > 1e-300
    v_saddle = (v00 * v11 - v10 * v01) / d if has_saddle else 0.0
    h = 1.0 / sub
    total = 0.0
    for j in range(sub):
        y0 = j * h
        y1 = (j + 1) * h
        e00 = a + c * y0
        e10 = a + b + (c + d) * y0
        e01 = a + c * y1
        e11 = a + b + (c + d) * y1
        band_min = min(min(e00, e10), min(e01, e11))
        band_max = max(max(e00, e10), max(e01, e11))
        if band_min > iso or band_max < iso:
            continue
        bx0 = b + d * y0
        bx1 = b + d * y1
        for i in range(sub):
            x0 = i * h
            x1 = (i + 1) * h
            f00 = e00 + bx0 * x0 - iso
            f10 = e00 + bx0 * x1 - iso
            f01 = e01 + bx1 * x0 - iso
            f11 = e01 + bx1 * x1 - iso
            p00 = f00 > 0.0
            p10 = f10 > 0.0
            p01 = f01 > 0.0
            p11 = f11 > 0.0
            if p00 == p10 and p00 == p01 and p00 == p11:
                continue
            # linear crossings on the sub-cell edges (face coordinates)
            bot_x = 0.0
            top_x = 0.0
            left_y = 0.0
            right_y = 0.0
            n_cross = 0
            has_bot = p00 != p10
            has_top = p01 != p11
            has_left = p00 != p01
            has_right = p10 != p11
            if has_bot:
                bot_x = x0 + (x1 - x0) * f00 / (f00 - f10)
                n_cross += 1
            if has_top:
                top_x = x0 + (x1 - x0) * f01 / (f01 - f11)
                n_cross += 1
            if has_left:
                left_y = y0 + (y1 - y0) * f00 / (f00 - f01)
                n_cross += 1
            if has_right:
                right_y = y0 + (y1 - y0) * f10 / (f10 - f11)
                n_cross += 1
            if n_cross == 2:
                if has_bot and has_top:
                    dx = (top_x - bot_x) * fw
                    dy = (y1 - y0) * fh
                elif has_left and has_right:
                    dx = (x1 - x0) * fw
                    dy = (right_y - left_y) * fh
                elif has_bot and has_left:
                    dx = (bot_x - x0) * fw
                    dy = (y0 - left_y) * fh
                elif has_bot and has_right:
                    dx = (bot_x - x1) * fw
                    dy = (y0 - right_y) * fh
                elif has_top and has_left:
                    dx = (top_x - x0) * fw
                    dy = (y1 - left_y) * fh
                else:
                    dx = (top_x - x1) * fw
                    dy = (y1 - right_y) * fh
                total += math.sqrt(dx * dx + dy * dy)
            elif n_cross == 4:
                # ambiguous sub-cell: pair by the bilinear's critical value
                connect_diag = has_saddle and ((v_saddle - iso > 0.0) == p00)
                if connect_diag:
                    dx1 = (bot_x - x1) * fw
                    dy1 = (y0 - right_y) * fh
                    dx2 = (top_x - x0) * fw
                    dy2 = (y1 - left_y) * fh
                else:
                    dx1 = (bot_x - x0) * fw
                    dy1 = (y0 - left_y) * fh
                    dx2 = (top_x - x1) * fw
                    dy2 = (y1 - right_y) * fh
                total += math.sqrt(dx1 * dx1 + dy1 * dy1)
                total += math.sqrt(dx2 * dx2 + dy2 * dy2)
    # a saddle face carries two contour branches but only one of them can
    # belong to the cut, so the summed length is halved
    s00 = v00 - iso
    s10 = v10 - iso
    s01 = v01 - iso
    s11 = v11 - iso
    if s00 * s11 > 0.0 and s10 * s01 > 0.0 and s00 * s10 < 0.0:
        total *= 0.5
    return total


def face_contour_length(face_corners, iso: float,
                        face_dims=(1.0, 1.0), subdiv: int = FACE_SUBDIV) -> float:
    """Arc length of the iso-contour on one cell face, in world units.

    ``face_corners`` are (v00, v10, v01, v11) over the face's two in-plane
    axes; ``face_dims`` scales the unit square to the face's world extent.
    """
    v00, v10, v01, v11 = (float(v) for v in face_corners)
    return float(_ms_face_length(v00, v10, v01, v11, float(iso),
                                 float(face_dims[0]), float(face_dims[1]),
                                 int(subdiv)))


@njit(cache=True, parallel=True)
def _face_weights_bulk(grid, ax, ix, iy, iz, iso, sx, sy, sz, sub, out):
    """Contour lengths for many +axis faces at once (axis per entry)."""
    for k in prange(ix.shape[0]):
        i = ix[k]
        j = iy[k]
        l = iz[k]
        if ax[k] == 0:
            v00 = grid[l, j, i + 1]
            v10 = grid[l, j + 1, i + 1]
            v01 = grid[l + 1, j, i + 1]
            v11 = grid[l + 1, j + 1, i + 1]
            fw = sy
            fh = sz
        elif ax[k] == 1:
            v00 = grid[l, j + 1, i]
            v10 = grid[l, j + 1, i + 1]
            v01 = grid[l + 1, j + 1, i]
            v11 = grid[l + 1, j + 1, i + 1]
            fw = sx
            fh = sz
        else:
            v00 = grid[l + 1, j, i]
            v10 = grid[l + 1, j, i + 1]
            v01 = grid[l + 1, j + 1, i]
            v11 = grid[l + 1, j + 1, i + 1]
            fw = sx
            fh = sy
        out[k] = _ms_face_length(v00, v10, v01, v11, iso, fw, fh, sub)


@dataclass(frozen=True)
class IsoGraph:
    """6-neighborhood graph over the iso-crossing cells reachable from seeds."""

    iso: float
    cell_dims: tuple[int, int, int]
    nodes: np.ndarray        # sorted linear cell ids, int64
    edge_a: np.ndarray       # int64 cell ids
    edge_b: np.ndarray
    edge_w: np.ndarray       # float64, world-length units, all > 0

    @property
    def node_count(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def edge_count(self) -> int:
        return int(self.edge_a.shape[0])

    def edges(self):
        for a, b, w in zip(self.edge_a, self.edge_b, self.edge_w):
            yield int(a), int(b), float(w)


@dataclass(frozen=True)
class CutResult:
    foreground_cells: frozenset[int]
    background_cells: frozenset[int]
    cut_weight: float
    node_count: int
    solve_time: float
    max_flow: float

    def to_json_dict(self, iso: float) -> dict:
        return {
            "iso": iso,
            "foreground_cells": sorted(self.foreground_cells),
            "background_cells": sorted(self.background_cells),
            "cut_weight": self.cut_weight,
            "node_count": self.node_count,
        }


def save_cut(cut: CutResult, iso: float, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cut.to_json_dict(iso)))


def crossing_mask(vol: ScalarVolume, iso: float) -> np.ndarray:
    """Boolean (ncz, ncy, ncx) mask of cells straddling the isovalue."""
    cmin, cmax = vol.cell_value_bounds()
    return (cmin < iso) & (iso <= cmax)


def build_graph(vol: ScalarVolume, iso: float, seeds: SeedSets,
                crop: CropBounds | None = None) -> IsoGraph:
    """BFS the crossing cells 6-connectedly from both seed sets and weigh faces.

    Seeds must themselves be crossing cells inside the crop; zero-weight faces
    are dropped from the edge list. Nodes come out sorted by cell id.
    """
    if crop is None:
        crop = CropBounds.full(vol)
    ncx, ncy, ncz = vol.cell_dims
    cross = crossing_mask(vol, iso)
    in_crop = np.zeros_like(cross)
    in_crop[crop.lo[2]:crop.hi[2], crop.lo[1]:crop.hi[1], crop.lo[0]:crop.hi[0]] = True
    eligible = cross & in_crop
    flat_eligible = eligible.reshape(-1)

    seed_ids = list(seeds.foreground) + list(seeds.background)
    if not seed_ids:
        raise ConfigError("segmentation needs at least one seed cell")
    for cid in seed_ids:
        if not 0 <= cid < ncx * ncy * ncz:
            raise SeedError(f"seed cell {cid} outside the cell grid")
        if not flat_eligible[cid]:
            iz, rem = divmod(int(cid), ncx * ncy)
            iy, ix = divmod(rem, ncx)
            if not in_crop[iz, iy, ix]:
                raise SeedError(f"seed cell {cid} is outside the crop region")
            raise SeedError(f"seed cell {cid} does not contain the isosurface")

    visited = np.zeros(ncx * ncy * ncz, dtype=bool)
    frontier = np.unique(np.asarray(seed_ids, dtype=np.int64))
    visited[frontier] = True
    strides = {"x": 1, "y": ncx, "z": ncx * ncy}
    while frontier.size:
        neighbors = []
        ix = frontier % ncx
        iy = (frontier // ncx) % ncy
        iz = frontier // (ncx * ncy)
        neighbors.append(frontier[ix < ncx - 1] + strides["x"])
        neighbors.append(frontier[ix > 0] - strides["x"])
        neighbors.append(frontier[iy < ncy - 1] + strides["y"])
        neighbors.append(frontier[iy > 0] - strides["y"])
        neighbors.append(frontier[iz < ncz - 1] + strides["z"])
        neighbors.append(frontier[iz > 0] - strides["z"])
        cand = np.unique(np.concatenate(neighbors))
        cand = cand[flat_eligible[cand] & ~visited[cand]]
        visited[cand] = True
        frontier = cand

    nodes = np.flatnonzero(visited).astype(np.int64)

    # +axis edges between member cells
    edge_a_parts = []
    edge_ax = []
    ix = nodes % ncx
    iy = (nodes // ncx) % ncy
    iz = nodes // (ncx * ncy)
    for axis, stride, coord, limit in (
            (0, strides["x"], ix, ncx), (1, strides["y"], iy, ncy),
            (2, strides["z"], iz, ncz)):
        ok = coord < limit - 1
        cand = nodes[ok]
        cand = cand[visited[cand + stride]]
        edge_a_parts.append(cand)
        edge_ax.append(np.full(cand.shape[0], axis, dtype=np.int8))
    edge_a = np.concatenate(edge_a_parts) if edge_a_parts else np.empty(0, np.int64)
    axes = np.concatenate(edge_ax) if edge_ax else np.empty(0, np.int8)
    stride_by_axis = np.array([strides["x"], strides["y"], strides["z"]], dtype=np.int64)
    edge_b = edge_a + stride_by_axis[axes]

    weights = np.empty(edge_a.shape[0], dtype=np.float64)
    if edge_a.shape[0]:
        exa = (edge_a % ncx).astype(np.int64)
        eya = ((edge_a // ncx) % ncy).astype(np.int64)
        eza = (edge_a // (ncx * ncy)).astype(np.int64)
        sx, sy, sz = vol.spacing
        _face_weights_bulk(vol.grid, axes, exa, eya, eza, float(iso),
                           sx, sy, sz, FACE_SUBDIV, weights)
    keep = weights > 0.0
    return IsoGraph(iso=float(iso), cell_dims=vol.cell_dims, nodes=nodes,
                    edge_a=edge_a[keep], edge_b=edge_b[keep], edge_w=weights[keep])


def min_cut(graph: IsoGraph, seeds: SeedSets) -> CutResult:
    """Minimum-weight cut separating the two seed sets (max-flow dual).

    Super-source/sink are tied to the seeds with effectively infinite
    capacities; the foreground side is what stays reachable from the source
    in the residual graph.
    """
    if not seeds.foreground or not seeds.background:
        raise ConfigError("min_cut needs non-empty foreground and background seeds")
    start = time.perf_counter()
    nodes = graph.nodes
    n = nodes.shape[0]
    idx_fg = np.searchsorted(nodes, np.asarray(seeds.foreground, dtype=np.int64))
    idx_bg = np.searchsorted(nodes, np.asarray(seeds.background, dtype=np.int64))
    for pos, cid in zip(idx_fg, seeds.foreground):
        if pos >= n or nodes[pos] != cid:
            raise SeedError(f"foreground seed {cid} is not a graph node")
    for pos, cid in zip(idx_bg, seeds.background):
        if pos >= n or nodes[pos] != cid:
            raise SeedError(f"background seed {cid} is not a graph node")

    ia = np.searchsorted(nodes, graph.edge_a).astype(np.int64)
    ib = np.searchsorted(nodes, graph.edge_b).astype(np.int64)
    max_w = float(graph.edge_w.max()) if graph.edge_w.size else 1.0
    inf_cap = 1e9 * max_w
    source = n
    sink = n + 1
    n_edges = ia.shape[0]
    n_arcs = n_edges + len(idx_fg) + len(idx_bg)
    arc_u = np.empty(n_arcs, np.int64)
    arc_v = np.empty(n_arcs, np.int64)
    arc_cap = np.empty((n_arcs, 2), np.float64)
    arc_u[:n_edges] = ia
    arc_v[:n_edges] = ib
    arc_cap[:n_edges, 0] = graph.edge_w
    arc_cap[:n_edges, 1] = graph.edge_w
    k = n_edges
    for pos in idx_fg:
        arc_u[k] = source
        arc_v[k] = pos
        arc_cap[k, 0] = inf_cap
        arc_cap[k, 1] = 0.0
        k += 1
    for pos in idx_bg:
        arc_u[k] = pos
        arc_v[k] = sink
        arc_cap[k, 0] = inf_cap
        arc_cap[k, 1] = 0.0
        k += 1

    e_to, e_cap, e_next, head = _maxflow.build_adjacency(n + 2, arc_u, arc_v, arc_cap)
    flow = float(_maxflow.max_flow(n + 2, source, sink, e_to, e_cap, e_next, head))
    reach = _maxflow.residual_reachable(n + 2, source, e_to, e_cap, e_next, head)
    fg_mask = reach[:n].astype(bool)
    cut_edges = fg_mask[ia] != fg_mask[ib]
    cut_weight = float(graph.edge_w[cut_edges].sum())
    elapsed = time.perf_counter() - start
    fg_cells = frozenset(int(c) for c in nodes[fg_mask])
    bg_cells = frozenset(int(c) for c in nodes[~fg_mask])
    return CutResult(foreground_cells=fg_cells, background_cells=bg_cells,
                     cut_weight=cut_weight, node_count=n,
                     solve_time=elapsed, max_flow=flow)
