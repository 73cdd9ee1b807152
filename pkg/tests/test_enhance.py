import math

import numpy as np
import pytest

from isoray import (ConfigError, EnhanceParams, Light, LocalTransferFunction,
                    Ray, ShadingParams, accumulate_color, build_speed_color_map,
                    generate_synthetic, gradient_central, intersect_isosurface,
                    lookup_color, per_sample_alpha, rate_deep, rate_shallow,
                    shade, SyntheticSpec)

from .oracles import composite_piecewise_constant


class TestPerSampleAlpha:
    def test_opaque_stays_opaque(self):
        for speed in (0.01, 1.0, 50.0):
            assert per_sample_alpha(1.0, speed, 8) == 1.0

    def test_transparent_stays_transparent(self):
        assert per_sample_alpha(0.0, 3.0, 8) == 0.0

    def test_reference_values(self):
        assert per_sample_alpha(0.5, 1.0, 1) == pytest.approx(0.5, abs=1e-12)
        assert per_sample_alpha(0.5, 2.0, 1) == pytest.approx(
            1.0 - 0.5 ** 0.5, abs=1e-12)  # ~0.2929

    def test_matches_compositing_two_half_samples(self):
        # one sample == compositing two samples of half length
        a = 0.37
        speed = 0.8
        n = 4
        whole = per_sample_alpha(a, speed, n)
        half = per_sample_alpha(a, speed * 2.0, n)
        assert 1.0 - (1.0 - half) ** 2 == pytest.approx(whole, abs=1e-12)

    def test_monotone_decreasing_in_speed(self):
        # thicker neighborhood (lower speed) accumulates more per sample
        speeds = np.linspace(0.05, 5.0, 40)
        values = [per_sample_alpha(0.5, s, 4) for s in speeds]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_literal_form_monotone_increasing(self):
        speeds = np.linspace(0.05, 5.0, 40)
        values = [per_sample_alpha(0.5, s, 4, literal=True) for s in speeds]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_nonpositive_speed_rejected(self):
        with pytest.raises(ConfigError):
            per_sample_alpha(0.5, 0.0, 4)


class TestAccumulate:
    def test_uniform_color_invariant_under_speed(self):
        c = (0.3, 0.6, 0.9)
        tf = LocalTransferFunction(tuple((a, c) for a in (0.2, 0.5, 0.8, 1.0)))
        for speed in (0.05, 0.3, 2.0, 20.0):
            assert np.allclose(accumulate_color(tf, speed), c, atol=1e-12)

    def test_single_opaque_entry(self):
        tf = LocalTransferFunction(((1.0, (0.1, 0.2, 0.3)),))
        assert np.allclose(accumulate_color(tf, 0.7), (0.1, 0.2, 0.3))

    def test_matches_dense_subsample_compositing(self):
        rng = np.random.default_rng(5)
        alphas = np.sort(rng.uniform(0.05, 0.9, 4))
        alphas[-1] = 1.0
        colors = rng.uniform(0, 1, (4, 3))
        tf = LocalTransferFunction(tuple((float(a), tuple(c))
                                         for a, c in zip(alphas, colors)))
        mine = accumulate_color(tf, 0.7)
        dense = composite_piecewise_constant(alphas, colors, 0.7)
        assert np.max(np.abs(mine - dense)) <= 2.0 / 255.0

    def test_accumulation_saturates(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            n = rng.integers(1, 8)
            alphas = rng.uniform(0.0, 1.0, n)
            alphas[-1] = 1.0
            colors = rng.uniform(0, 1, (n, 3))
            tf = LocalTransferFunction(tuple((float(a), tuple(c))
                                             for a, c in zip(alphas, colors)))
            acc = accumulate_color(tf, float(rng.uniform(0.05, 5.0)))
            assert np.all(acc >= 0.0) and np.all(acc <= 1.0)


class TestSpeedColorMap:
    def test_monochrome_map(self):
        tf = LocalTransferFunction(tuple((a, (0.4, 0.5, 0.6))
                                         for a in (0.3, 0.6, 1.0)))
        smap = build_speed_color_map(tf, m=32)
        assert np.allclose(smap.colors, (0.4, 0.5, 0.6), atol=1e-12)

    def test_midpoint_entry_is_ln2(self):
        tf = LocalTransferFunction(((0.2, (1, 0, 0)), (1.0, (0, 0, 1))))
        m = 64
        smap = build_speed_color_map(tf, m=m)
        expected = accumulate_color(tf, -math.log(1 - (m // 2) / m))  # = ln 2
        assert np.allclose(smap.colors[m // 2 - 1], expected, atol=0)
        assert -math.log(1 - (m // 2) / m) == pytest.approx(math.log(2))

    def test_two_color_map_monotone_toward_deep_entry(self):
        # near entry red, deep entry blue: higher speed -> thinner per-sample
        # opacity -> the deep opaque entry dominates, so red falls, blue rises
        tf = LocalTransferFunction(((0.6, (1.0, 0.0, 0.0)), (1.0, (0.0, 0.0, 1.0))))
        smap = build_speed_color_map(tf, m=128)
        red = smap.colors[:, 0]
        blue = smap.colors[:, 2]
        assert np.all(np.diff(red) <= 1e-12)
        assert np.all(np.diff(blue) >= -1e-12)
        assert red[0] > 0.99  # speed -> 0 limit: nearest entry saturates
        assert blue[-1] > 0.99  # speed -> inf limit: deepest entry

    def test_limit_entry_is_deepest_color(self):
        tf = LocalTransferFunction(((0.9, (1.0, 0.0, 0.0)), (1.0, (0.0, 1.0, 0.0))))
        smap = build_speed_color_map(tf, m=16)
        assert np.allclose(smap.colors[-1], (0.0, 1.0, 0.0), atol=1e-4)

    def test_lookup_exact_at_sampled_speeds(self):
        tf = LocalTransferFunction(((0.3, (0.9, 0.1, 0.2)), (1.0, (0.1, 0.2, 0.9))))
        m = 256
        smap = build_speed_color_map(tf, m=m)
        for j in (1, 2, 17, 128, 200, 255):
            speed = -math.log(1.0 - j / m)
            assert np.array_equal(lookup_color(smap, speed), smap.colors[j - 1])

    def test_lookup_clamps_low_and_high(self):
        tf = LocalTransferFunction(((0.3, (1, 0, 0)), (1.0, (0, 0, 1))))
        smap = build_speed_color_map(tf, m=256)
        assert np.array_equal(lookup_color(smap, 1e-9), smap.colors[0])
        assert np.array_equal(lookup_color(smap, 10.0), smap.colors[255])

    def test_lookup_speed10_maps_to_last_index(self):
        # 1 - e^-10 ~ 0.99995 -> index 256 of 256
        assert round(256 * (1.0 - math.exp(-10.0))) == 256

    def test_map_blend_agreement(self):
        rng = np.random.default_rng(8)
        alphas = np.sort(rng.uniform(0.1, 0.9, 5))
        alphas[-1] = 1.0
        colors = rng.uniform(0, 1, (5, 3))
        tf = LocalTransferFunction(tuple((float(a), tuple(c))
                                         for a, c in zip(alphas, colors)))
        m = 64
        smap = build_speed_color_map(tf, m=m)
        for j in range(1, m):
            speed = -math.log(1.0 - j / m)
            assert np.array_equal(lookup_color(smap, speed),
                                  accumulate_color(tf, speed))


class TestRates:
    def test_shallow_perpendicular_floors(self):
        assert rate_shallow((0.0, 1.0, 0.0), (1.0, 0.0, 0.0)) == 1e-6

    def test_shallow_ramp(self, ramp64):
        ez = ramp64.extent[2]
        g = gradient_central(ramp64, np.asarray(ramp64.extent) * 0.5)
        assert rate_shallow(g, (0.0, 0.0, 1.0)) == pytest.approx(1.0 / ez, rel=1e-9)

    def test_shallow_matches_cosine_identity(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            g = rng.normal(size=3)
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            gnorm = np.linalg.norm(g)
            cos = abs(float(g @ d)) / gnorm
            assert rate_shallow(g, d) == pytest.approx(gnorm * cos, abs=1e-12)

    def test_deep_ramp_rate_independent_of_delta_v(self, ramp64):
        ez = ramp64.extent[2]
        ray = Ray((0.5, 0.5, -1.0), (0.0, 0.0, 1.0))
        hit = intersect_isosurface(ray, ramp64, 0.4)
        for dv in (0.05, 0.1, 0.3):
            params = EnhanceParams(isovalue=0.4, delta_v=dv,
                                   std_sample_distance=0.01, mode="deep")
            rate = rate_deep(ramp64, hit, ray, params)
            assert rate == pytest.approx(1.0 / ez, rel=1e-6)

    def test_deep_clamps_when_target_unreachable(self, ramp64):
        ray = Ray((0.5, 0.5, -1.0), (0.0, 0.0, 1.0))
        hit = intersect_isosurface(ray, ramp64, 0.9)
        # target 0.9 + 0.5 is never reached; budget caps the search
        params = EnhanceParams(isovalue=0.9, delta_v=0.5,
                               std_sample_distance=0.01, mode="deep",
                               deep_step=0.01, deep_max_steps=17)
        rate = rate_deep(ramp64, hit, ray, params)
        assert rate == pytest.approx(0.5 / (17 * 0.01), rel=1e-12)

    def test_deep_sees_through_thin_shell(self):
        # shell peaks below isovalue+delta_v: the deep search runs into the
        # hollow interior and reports a far smaller rate than the gradient
        vol = generate_synthetic(SyntheticSpec(
            kind="nested-spheres", dims=(96, 96, 96),
            params=(0.5, 0.5, 0.5, 0.28, 0.34, 0.62)))
        center = np.asarray(vol.extent) * 0.5
        ray = Ray(center + np.array([0.0, 0.0, -2.0]), (0.0, 0.0, 1.0))
        hit = intersect_isosurface(ray, vol, 0.5)
        assert hit is not None
        params = EnhanceParams(isovalue=0.5, delta_v=0.2,
                               std_sample_distance=0.01, mode="deep")
        shallow = rate_shallow(gradient_central(vol, hit.position), ray.dir)
        deep = rate_deep(vol, hit, ray, params)
        assert deep < shallow / 20.0


class TestShade:
    def test_light_along_normal(self):
        from isoray.raycast import Hit
        hit = Hit(t=1.0, position=np.zeros(3), cell_index=(0, 0, 0), cell_id=0,
                  crossings_skipped=0)
        ray = Ray((0, 0, 1), (0.0, 0.0, -1.0))
        gradient = (0.0, 0.0, -2.0)  # normal faces +z, toward the viewer
        material = np.array([0.6, 0.4, 0.2])
        out = shade(hit, material, gradient, [Light(direction=(0, 0, 1))], ray)
        expected = 0.85 * material + 0.15
        assert np.allclose(out, np.minimum(expected, 1.0), atol=1e-12)

    def test_zero_gradient_is_ambient_only(self):
        from isoray.raycast import Hit
        hit = Hit(t=1.0, position=np.zeros(3), cell_index=(0, 0, 0), cell_id=0,
                  crossings_skipped=0)
        ray = Ray((0, 0, 1), (0.0, 0.0, -1.0))
        out = shade(hit, (0.5, 0.5, 0.5), (0.0, 0.0, 0.0),
                    [Light(direction=(0, 0, 1))], ray)
        assert np.allclose(out, 0.15 * 0.5, atol=1e-12)

    def test_output_clamped(self):
        from isoray.raycast import Hit
        hit = Hit(t=1.0, position=np.zeros(3), cell_index=(0, 0, 0), cell_id=0,
                  crossings_skipped=0)
        ray = Ray((0, 0, 1), (0.0, 0.0, -1.0))
        lights = [Light(direction=(0, 0, 1), color=(5, 5, 5))]
        out = shade(hit, (1, 1, 1), (0, 0, -1), lights, ray,
                    ShadingParams(ambient=0.5, diffuse=1.0, specular=1.0))
        assert np.all(out <= 1.0)
