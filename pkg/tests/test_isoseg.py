import math

import numpy as np
import pytest

from isoray import (ConfigError, CropBounds, SeedSets, SeedError,
                    build_graph, cell_contains_iso, face_contour_length,
                    intersect_isosurface, linear_cell_id, min_cut)
from isoray.isoseg import IsoGraph, crossing_mask, save_cut

from .conftest import make_random_rays
from .oracles import (brute_force_min_cut, hyperbola_arc_length,
                      seeds_separated)


class TestCellContainsIso:
    def test_uniform_below(self):
        assert not cell_contains_iso([0.0] * 8, 0.5)

    def test_single_high_corner(self):
        assert cell_contains_iso([0, 0, 0, 0, 0, 0, 0, 1.0], 0.5)

    def test_half_open_ties(self):
        # iso equal to the max counts, equal to the min does not
        assert cell_contains_iso([0.0, 1.0] + [0.2] * 6, 1.0)
        assert not cell_contains_iso([0.5] * 8, 0.5)
        assert not cell_contains_iso([0.5, 0.7] + [0.6] * 6, 0.5)

    def test_renderer_hits_are_subset_of_crossing_cells(self, sphere64):
        mask = crossing_mask(sphere64, 0.5)
        for ray in make_random_rays(sphere64, 500, seed=41):
            hit = intersect_isosurface(ray, sphere64, 0.5)
            if hit is not None:
                ix, iy, iz = hit.cell_index
                assert mask[iz, iy, ix]


class TestFaceContourLength:
    def test_linear_diagonal(self):
        assert face_contour_length((0, 1, 1, 2), 1.0) == pytest.approx(
            math.sqrt(2.0), abs=1e-3)

    def test_vertical_line(self):
        assert face_contour_length((0, 1, 0, 1), 0.5) == pytest.approx(1.0, abs=1e-3)

    def test_no_contour_is_zero(self):
        assert face_contour_length((0.1, 0.2, 0.3, 0.4), 0.9) == 0.0

    def test_saddle_returns_half_total(self):
        corners = (0.0, 1.0, 1.0, 0.2)
        total = hyperbola_arc_length(corners, 0.5)
        assert face_contour_length(corners, 0.5) == pytest.approx(
            total / 2.0, abs=1e-3)

    def test_non_saddle_matches_full_arc_length(self):
        corners = (0.0, 1.0, 1.0, 0.9)  # one branch only
        total = hyperbola_arc_length(corners, 0.5)
        assert face_contour_length(corners, 0.5) == pytest.approx(total, abs=1e-3)

    def test_symmetry_under_face_symmetries(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            v00, v10, v01, v11 = rng.uniform(0, 1, 4)
            iso = rng.uniform(0.2, 0.8)
            base = face_contour_length((v00, v10, v01, v11), iso)
            symmetries = [
                (v10, v00, v11, v01),   # mirror x
                (v01, v11, v00, v10),   # mirror y
                (v00, v01, v10, v11),   # transpose
                (v11, v01, v10, v00),   # rotate 180
                (v10, v11, v00, v01),   # rotate 90 variants
                (v01, v00, v11, v10),
                (v11, v10, v01, v00),
            ]
            for sym in symmetries:
                assert face_contour_length(sym, iso) == pytest.approx(base, abs=2e-3)

    def test_scale_covariance(self):
        rng = np.random.default_rng(43)
        for _ in range(20):
            corners = tuple(rng.uniform(0, 1, 4))
            iso = 0.5
            one = face_contour_length(corners, iso, face_dims=(1.0, 1.0))
            two = face_contour_length(corners, iso, face_dims=(2.0, 2.0))
            assert two == pytest.approx(2.0 * one, rel=1e-9, abs=1e-12)

    def test_anisotropic_dims(self):
        # vertical contour x=0.5 crosses a (2 x 3) face: length = the y extent
        assert face_contour_length((0, 1, 0, 1), 0.5, face_dims=(2.0, 3.0)) \
            == pytest.approx(3.0, abs=3e-3)


def _center_row_pole_cells(vol, iso=0.5):
    """Leftmost and rightmost crossing cells on the volume's center row."""
    mask = crossing_mask(vol, iso)
    cd = vol.cell_dims
    row = mask[cd[2] // 2, cd[1] // 2, :]
    xs = np.nonzero(row)[0]
    left = (int(xs[0]), cd[1] // 2, cd[2] // 2)
    right = (int(xs[-1]), cd[1] // 2, cd[2] // 2)
    return linear_cell_id(left, cd), linear_cell_id(right, cd)


class TestBuildGraph:
    def test_two_spheres_split_into_components(self, twospheres128):
        left, right = _center_row_pole_cells(twospheres128)
        seeds = SeedSets(foreground=[left], background=[right])
        graph = build_graph(twospheres128, 0.5, seeds)
        # the two surfaces are not 6-connected: no path between the seeds
        cut = min_cut(graph, seeds)
        assert cut.cut_weight == 0.0

    def test_node_count_matches_exhaustive_scan(self, sphere128):
        mask = crossing_mask(sphere128, 0.5)
        cd = sphere128.cell_dims
        # a seed on the surface reaches the whole (connected) shell
        zs, ys, xs = np.nonzero(mask)
        seed = linear_cell_id((int(xs[0]), int(ys[0]), int(zs[0])), cd)
        seeds = SeedSets(foreground=[seed])
        graph = build_graph(sphere128, 0.5, seeds)
        assert graph.node_count == int(mask.sum())

    def test_crop_strictly_reduces_nodes(self, sphere128):
        mask = crossing_mask(sphere128, 0.5)
        zs, ys, xs = np.nonzero(mask)
        cd = sphere128.cell_dims
        k = len(xs) // 2
        seed_cell = (int(xs[k]), int(ys[k]), int(zs[k]))
        seeds = SeedSets(foreground=[linear_cell_id(seed_cell, cd)])
        full = build_graph(sphere128, 0.5, seeds)
        crop = CropBounds(tuple(max(0, c - 20) for c in seed_cell),
                          tuple(min(d, c + 20) for c, d in zip(seed_cell, cd)))
        cropped = build_graph(sphere128, 0.5, seeds, crop=crop)
        assert 0 < cropped.node_count < full.node_count

    def test_edges_join_six_neighbors_with_positive_weight(self, sphere64):
        mask = crossing_mask(sphere64, 0.5)
        zs, ys, xs = np.nonzero(mask)
        cd = sphere64.cell_dims
        seeds = SeedSets(foreground=[linear_cell_id(
            (int(xs[0]), int(ys[0]), int(zs[0])), cd)])
        graph = build_graph(sphere64, 0.5, seeds)
        ncx, ncy = cd[0], cd[1]
        node_set = set(int(n) for n in graph.nodes)
        assert graph.edge_count > 0
        for a, b, w in graph.edges():
            assert w > 0.0
            assert a in node_set and b in node_set
            diff = b - a
            assert diff in (1, ncx, ncx * ncy)
        assert list(graph.nodes) == sorted(node_set)

    def test_seed_off_surface_rejected(self, sphere64):
        seeds = SeedSets(foreground=[0])  # corner cell, far from the surface
        with pytest.raises(SeedError) as err:
            build_graph(sphere64, 0.5, seeds)
        assert "0" in str(err.value)

    def test_no_seeds_rejected(self, sphere64):
        with pytest.raises(ConfigError):
            build_graph(sphere64, 0.5, SeedSets())


def _graph_from_lists(nodes, edges, iso=0.5):
    ea = np.array([a for a, _, _ in edges], dtype=np.int64)
    eb = np.array([b for _, b, _ in edges], dtype=np.int64)
    ew = np.array([w for _, _, w in edges], dtype=np.float64)
    return IsoGraph(iso=iso, cell_dims=(64, 64, 64),
                    nodes=np.array(sorted(nodes), dtype=np.int64),
                    edge_a=ea, edge_b=eb, edge_w=ew)


class TestMinCut:
    def test_single_edge(self):
        graph = _graph_from_lists([1, 2], [(1, 2, 0.7)])
        cut = min_cut(graph, SeedSets(foreground=[1], background=[2]))
        assert cut.cut_weight == pytest.approx(0.7)
        assert cut.foreground_cells == {1}
        assert cut.background_cells == {2}

    def test_disconnected_components_zero_weight(self):
        graph = _graph_from_lists([1, 2, 3, 4], [(1, 2, 1.0), (3, 4, 1.0)])
        cut = min_cut(graph, SeedSets(foreground=[1], background=[3]))
        assert cut.cut_weight == 0.0
        assert {1, 2} <= cut.foreground_cells
        assert {3, 4} <= cut.background_cells

    def test_empty_seed_side_rejected(self):
        graph = _graph_from_lists([1, 2], [(1, 2, 1.0)])
        with pytest.raises(ConfigError):
            min_cut(graph, SeedSets(foreground=[1]))

    def test_seed_not_in_graph_rejected(self):
        graph = _graph_from_lists([1, 2], [(1, 2, 1.0)])
        with pytest.raises(SeedError):
            min_cut(graph, SeedSets(foreground=[1], background=[9]))

    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(44)
        for trial in range(200):
            n = int(rng.integers(3, 13))
            nodes = list(range(n))
            edges = []
            seen = set()
            n_edges = int(rng.integers(n - 1, min(n * (n - 1) // 2, 3 * n) + 1))
            while len(edges) < n_edges:
                a, b = rng.integers(0, n, 2)
                if a == b:
                    continue
                a, b = (int(min(a, b)), int(max(a, b)))
                if (a, b) in seen:
                    continue
                seen.add((a, b))
                edges.append((a, b, float(rng.uniform(0.05, 2.0))))
            fg = {0}
            bg = {n - 1}
            graph = _graph_from_lists(nodes, edges)
            cut = min_cut(graph, SeedSets(foreground=fg, background=bg))
            best = brute_force_min_cut(nodes, edges, fg, bg)
            assert cut.cut_weight == pytest.approx(best, rel=1e-9, abs=1e-12)
            assert cut.max_flow == pytest.approx(cut.cut_weight, rel=1e-6, abs=1e-9)

    def test_cut_separates_seeds_by_flood_fill(self):
        rng = np.random.default_rng(45)
        for _ in range(50):
            n = int(rng.integers(4, 12))
            nodes = list(range(n))
            edges = []
            for a in range(n - 1):
                edges.append((a, a + 1, float(rng.uniform(0.1, 1.0))))
            for _ in range(n):
                a, b = sorted(rng.integers(0, n, 2))
                if a != b:
                    edges.append((int(a), int(b), float(rng.uniform(0.1, 1.0))))
            graph = _graph_from_lists(nodes, edges)
            cut = min_cut(graph, SeedSets(foreground=[0], background=[n - 1]))
            fg = cut.foreground_cells
            cut_edges = [k for k, (a, b, _w) in enumerate(edges)
                         if (a in fg) != (b in fg)]
            assert seeds_separated(nodes, edges, cut_edges, [0], [n - 1])

    def test_dumbbell_cut_matches_neck_circumference(self, dumbbell128):
        # seed whole lobe caps (as a user's drag stroke would): a lone seed
        # cell could be snipped off cheaper than the neck
        scale = min(dumbbell128.extent)
        mask = crossing_mask(dumbbell128, 0.5)
        cd = dumbbell128.cell_dims
        sx = dumbbell128.spacing[0]
        zs, ys, xs = np.nonzero(mask)
        ids = xs.astype(np.int64) + ys.astype(np.int64) * cd[0] \
            + zs.astype(np.int64) * cd[0] * cd[1]
        fg_ids = ids[xs * sx < 0.3 * scale]
        bg_ids = ids[xs * sx > 0.7 * scale]
        assert fg_ids.size > 100 and bg_ids.size > 100
        seeds = SeedSets(foreground=fg_ids, background=bg_ids)
        graph = build_graph(dumbbell128, 0.5, seeds)
        cut = min_cut(graph, seeds)
        circumference = 2.0 * math.pi * 0.07 * scale
        assert abs(cut.cut_weight - circumference) / circumference < 0.10
        assert set(int(c) for c in fg_ids) <= cut.foreground_cells
        assert set(int(c) for c in bg_ids) <= cut.background_cells

    def test_solve_time_recorded(self):
        graph = _graph_from_lists([1, 2], [(1, 2, 1.0)])
        cut = min_cut(graph, SeedSets(foreground=[1], background=[2]))
        assert cut.solve_time >= 0.0
        assert cut.node_count == 2

    def test_seg_json_roundtrip(self, tmp_path):
        graph = _graph_from_lists([1, 2, 3], [(1, 2, 0.5), (2, 3, 0.25)])
        cut = min_cut(graph, SeedSets(foreground=[1], background=[3]))
        path = tmp_path / "cut.seg.json"
        save_cut(cut, 0.5, path)
        import json
        doc = json.loads(path.read_text())
        assert doc["iso"] == 0.5
        assert doc["node_count"] == 3
        assert doc["cut_weight"] == pytest.approx(0.25)
        assert set(doc) >= {"iso", "foreground_cells", "background_cells",
                            "cut_weight", "node_count"}
