import numpy as np
import pytest

from isoray import (Camera, EnhanceParams, LocalTransferFunction, ScalarVolume,
                    TransitionalTF1D, VolumeMeta, accumulate_color, eval_tf,
                    render_fvr)
from isoray.scene import render_scene, single_iso_scene


def _tf(iso=0.4, dv=0.2, std=0.05, n=16):
    local = LocalTransferFunction.ramp((1.0, 0.2, 0.1), (0.1, 0.2, 1.0), n=n)
    return TransitionalTF1D(isovalue=iso, delta_v=dv, local_tf=local,
                            std_sample_distance=std)


class TestEvalTf:
    def test_below_isovalue_transparent(self):
        tf = _tf()
        assert eval_tf(tf, 0.39)[3] == 0.0

    def test_top_of_transition_opaque_last_color(self):
        tf = _tf()
        r, g, b, a = eval_tf(tf, 0.4 + 0.2)
        assert a == 1.0
        assert (r, g, b) == tf.local_tf.entries[-1][1]

    def test_above_transition_opaque(self):
        tf = _tf()
        assert eval_tf(tf, 0.95)[3] == 1.0

    def test_midpoint_of_two_entries_mixes_linearly(self):
        local = LocalTransferFunction(((0.2, (1.0, 0.0, 0.0)),
                                       (1.0, (0.0, 0.0, 1.0))))
        tf = TransitionalTF1D(isovalue=0.4, delta_v=0.2, local_tf=local,
                              std_sample_distance=0.05)
        # entries anchor at 0.5 and 0.6; midpoint 0.55 mixes them equally
        r, g, b, a = eval_tf(tf, 0.55)
        assert a == pytest.approx(0.6)
        assert (r, b) == (pytest.approx(0.5), pytest.approx(0.5))

    def test_alpha_continuous_at_isovalue(self):
        tf = _tf()
        assert eval_tf(tf, 0.4)[3] == pytest.approx(0.0, abs=1e-12)
        assert eval_tf(tf, 0.4 + 1e-9)[3] < 1e-6


class TestRenderFvr:
    def test_empty_medium_renders_background(self):
        meta = VolumeMeta(dims=(16, 16, 16), spacing=(1 / 15, 1 / 15, 1 / 15))
        vol = ScalarVolume(meta, np.zeros(16 ** 3))
        cam = Camera(eye=(0.5, 0.5, -2.0), look_at=(0.5, 0.5, 0.5),
                     image_dims=(16, 16))
        img = render_fvr(vol, cam, _tf(), sample_dist=0.01,
                         background=(0.25, 0.5, 0.75))
        assert np.allclose(img, (0.25, 0.5, 0.75), atol=5e-3)

    def test_energy_bounds(self, sphere64):
        cam = Camera(eye=(0.5, 0.5, -1.6), look_at=(0.5, 0.5, 0.5),
                     image_dims=(32, 32))
        img = render_fvr(sphere64, cam, _tf(iso=0.5), sample_dist=0.01)
        assert img.min() >= 0.0
        assert img.max() <= 1.0

    def test_ramp_matches_accumulated_color(self, ramp64):
        # flat isosurface neighborhood: every interior pixel converges to the
        # precomputed accumulation at the ramp's speed
        tf = _tf(iso=0.4, dv=0.2, std=0.05)
        cam = Camera(eye=(0.5, 0.5, -2.2), look_at=(0.5, 0.5, 0.5),
                     vfov_deg=14.0, image_dims=(24, 24))
        img = render_fvr(ramp64, cam, tf, sample_dist=tf.std_sample_distance / 8)
        rate = 1.0 / ramp64.extent[2]
        speed = rate / (tf.delta_v / tf.std_sample_distance)
        expected = accumulate_color(tf.local_tf, speed)
        interior = img[6:-6, 6:-6]
        assert np.max(np.abs(interior - expected)) <= 3.0 / 255.0

    def test_self_convergence_halving(self, sphere64):
        tf = _tf(iso=0.5, std=0.04)
        cam = Camera(eye=(0.5, 0.5, -1.6), look_at=(0.5, 0.5, 0.5),
                     vfov_deg=30.0, image_dims=(48, 48))
        imgs = {d: render_fvr(sphere64, cam, tf, sample_dist=d)
                for d in (0.02, 0.01, 0.005)}
        # interior disc only: silhouette pixels are not in the smooth regime
        yy, xx = np.mgrid[0:48, 0:48]
        mask = (yy - 23.5) ** 2 + (xx - 23.5) ** 2 < 14 ** 2
        d1 = np.abs(imgs[0.02] - imgs[0.01])[mask].mean()
        d2 = np.abs(imgs[0.01] - imgs[0.005])[mask].mean()
        assert np.max(np.abs(imgs[0.01] - imgs[0.005])[mask]) <= 2.0 / 255.0
        assert d1 >= 2.0 * d2

    def test_ceir_shallow_matches_fvr_on_ramp(self, ramp64):
        # the module-scale version of the acceptance equivalence check
        local = LocalTransferFunction.ramp((1.0, 0.2, 0.1), (0.1, 0.2, 1.0), n=16)
        params = EnhanceParams(isovalue=0.4, delta_v=0.2, std_sample_distance=0.05)
        cam = Camera(eye=(0.5, 0.5, -2.2), look_at=(0.5, 0.5, 0.5),
                     vfov_deg=14.0, image_dims=(24, 24))
        scene = single_iso_scene(ramp64, local, params, cam)
        ceir = render_scene(scene, mode_override="shallow", shaded=False)
        tf1d = TransitionalTF1D.from_enhance(local, params)
        fvr_img = render_fvr(ramp64, cam, tf1d, sample_dist=0.05 / 8)
        hit = ceir.hit_mask()
        assert hit.all()
        diff = np.abs(ceir.image - fvr_img)[hit]
        assert diff.max() <= 3.0 / 255.0
