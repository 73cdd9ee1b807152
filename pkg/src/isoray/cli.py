"""Headless driver: phantom generation, rendering, segmentation, composition,
benchmarking, and the service entry point."""

from __future__ import annotations

import json
import statistics
import sys
import time
from pathlib import Path

import click
import numpy as np

from .camera import Camera, frame_volume
from .enhance import load_tf
from .errors import IsorayError
from .explore import PeelWindow, SeedSets, build_peel_buffer, pick_voxels
from .fvr import TransitionalTF1D, render_fvr
from .imgio import save_png
from .isoseg import build_graph, min_cut, save_cut
from .raycast import CropBounds
from .scene import load_scene, render_scene, single_iso_scene
from .volume import (ScalarVolume, SyntheticSpec, generate_synthetic,
                     load_volume_pair, save_volume_pair)


def _fail(exc: Exception) -> "click.ClickException":
    return click.ClickException(f"{type(exc).__name__}: {exc}")


def _parse_triple(text: str, cast=int):
    parts = [cast(p) for p in text.split(",")]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise click.BadParameter(f"expected 1 or 3 comma-separated values, got {text!r}")
    return tuple(parts)


def _parse_pair(text: str):
    parts = [int(p) for p in text.split(",")]
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise click.BadParameter(f"expected 1 or 2 comma-separated values, got {text!r}")
    return tuple(parts)


def _parse_crop(text: str | None) -> CropBounds | None:
    if not text:
        return None
    try:
        lo_s, hi_s = text.split(":")
        return CropBounds(_parse_triple(lo_s), _parse_triple(hi_s))
    except (ValueError, IsorayError) as exc:
        raise click.BadParameter(f"crop must be 'a,b,c:d,e,f' ({exc})")


def _load_camera(path: str | None, vol: ScalarVolume,
                 image_dims=(512, 512)) -> Camera:
    if path is None:
        return frame_volume(vol.extent, image_dims=image_dims)
    return Camera.from_json_dict(json.loads(Path(path).read_text()))


def _load_peel(path: str | None, image_dims):
    if path is None:
        return None
    doc = json.loads(Path(path).read_text())
    windows = [PeelWindow(*[int(v) for v in r]) for r in doc.get("rects", [])]
    return build_peel_buffer(windows, image_dims)


def _resolve_seeds(path: str, vol: ScalarVolume, iso: float) -> list[int]:
    """Seed cells from a seeds JSON: direct ids, or pixels plus a camera."""
    doc = json.loads(Path(path).read_text())
    if "cells" in doc:
        return [int(c) for c in doc["cells"]]
    if "pixels" in doc:
        if "camera" not in doc:
            raise click.ClickException(
                f"{path}: pixel seeds need a 'camera' for the reference render")
        cam = Camera.from_json_dict(doc["camera"])
        from .enhance import EnhanceParams, LocalTransferFunction
        tf = LocalTransferFunction.ramp((0.8, 0.8, 0.8), (0.4, 0.4, 0.4))
        params = EnhanceParams(isovalue=iso, delta_v=0.1,
                               std_sample_distance=min(vol.spacing))
        res = render_scene(single_iso_scene(vol, tf, params, cam),
                           mode_override="mono")
        return sorted(pick_voxels(res.ids, [tuple(p) for p in doc["pixels"]]))
    raise click.ClickException(f"{path}: seeds JSON needs 'cells' or 'pixels'")


@click.group()
def main():
    """Isosurface rendering and scene-exploration toolkit."""


@main.command()
@click.option("--kind", required=True,
              type=click.Choice(["sphere", "two-spheres", "dumbbell", "ramp",
                                 "nested-spheres", "shell-with-inclusions"]))
@click.option("--dims", default="128", help="Grid points per axis (n or nx,ny,nz).")
@click.option("--params", default="", help="Kind-specific comma-separated fractions.")
@click.option("--spacing", default=None, help="World units per step (s or sx,sy,sz).")
@click.option("--out", required=True, type=click.Path(), help="Output pair base path.")
def synth(kind, dims, params, spacing, out):
    """Generate a synthetic phantom volume pair (<out>.raw + <out>.json)."""
    try:
        spec = SyntheticSpec(
            kind=kind, dims=_parse_triple(dims),
            params=tuple(float(p) for p in params.split(",") if p),
            spacing=_parse_triple(spacing, float) if spacing else None)
        raw, meta = save_volume_pair(generate_synthetic(spec), out)
    except (IsorayError, OSError, ValueError) as exc:
        raise _fail(exc)
    click.echo(f"wrote {raw} + {meta}")


@main.command()
@click.option("--volume", required=True, type=click.Path())
@click.option("--iso", type=float, default=None, help="Overrides the TF isovalue.")
@click.option("--tf", "tf_path", required=True, type=click.Path())
@click.option("--mode", type=click.Choice(["shallow", "deep", "mono"]), default=None)
@click.option("--camera", "camera_path", type=click.Path(), default=None)
@click.option("--peel", "peel_path", type=click.Path(), default=None)
@click.option("--crop", default=None)
@click.option("--size", default="512,512", help="Image dims when no camera file.")
@click.option("--unshaded", is_flag=True, help="Raw material colors, no lighting.")
@click.option("--out", required=True, type=click.Path())
@click.option("--ids", "ids_path", type=click.Path(), default=None,
              help="Dump the voxel-id buffer (little-endian int32 per pixel).")
def render(volume, iso, tf_path, mode, camera_path, peel_path, crop, size,
           unshaded, out, ids_path):
    """Render a color-enhanced (or monotone) isosurface image."""
    try:
        vol = load_volume_pair(volume)
        tf, params = load_tf(tf_path, isovalue=iso)
        cam = _load_camera(camera_path, vol, _parse_pair(size))
        scene = single_iso_scene(vol, tf, params, cam, crop=_parse_crop(crop))
        peel = _load_peel(peel_path, cam.image_dims)
        res = render_scene(scene, peel=peel, mode_override=mode,
                           shaded=not unshaded)
        save_png(res.image, out)
        if ids_path:
            res.ids.ids.astype("<i4").tofile(ids_path)
    except (IsorayError, OSError, ValueError, KeyError) as exc:
        raise _fail(exc)
    click.echo(f"wrote {out}")


@main.command()
@click.option("--volume", required=True, type=click.Path())
@click.option("--tf", "tf_path", required=True, type=click.Path())
@click.option("--sample-dist", type=float, required=True)
@click.option("--camera", "camera_path", type=click.Path(), default=None)
@click.option("--crop", default=None)
@click.option("--size", default="512,512")
@click.option("--shading", is_flag=True, help="Gradient shading inside the FVR.")
@click.option("--out", required=True, type=click.Path())
def fvr(volume, tf_path, sample_dist, camera_path, crop, size, shading, out):
    """Reference full-volume render of the transitional transfer function."""
    try:
        vol = load_volume_pair(volume)
        tf, params = load_tf(tf_path)
        cam = _load_camera(camera_path, vol, _parse_pair(size))
        img = render_fvr(vol, cam, TransitionalTF1D.from_enhance(tf, params),
                         sample_dist, crop=_parse_crop(crop), shading=shading)
        save_png(img, out)
    except (IsorayError, OSError, ValueError, KeyError) as exc:
        raise _fail(exc)
    click.echo(f"wrote {out}")


@main.command()
@click.option("--volume", required=True, type=click.Path())
@click.option("--iso", type=float, required=True)
@click.option("--fg-seeds", "fg_path", required=True, type=click.Path())
@click.option("--bg-seeds", "bg_path", required=True, type=click.Path())
@click.option("--crop", default=None)
@click.option("--out", type=click.Path(), default=None)
def segment(volume, iso, fg_path, bg_path, crop, out):
    """Min-cut isosurface segmentation between two seed sets."""
    try:
        vol = load_volume_pair(volume)
        seeds = SeedSets(foreground=_resolve_seeds(fg_path, vol, iso),
                         background=_resolve_seeds(bg_path, vol, iso))
        graph = build_graph(vol, iso, seeds, crop=_parse_crop(crop))
        cut = min_cut(graph, seeds)
        if out:
            save_cut(cut, iso, out)
    except (IsorayError, OSError, ValueError, KeyError) as exc:
        raise _fail(exc)
    click.echo(json.dumps({"node_count": cut.node_count,
                           "cut_weight": cut.cut_weight,
                           "solve_ms": cut.solve_time * 1000.0}))


@main.command()
@click.option("--scene", "scene_path", required=True, type=click.Path())
@click.option("--camera", "camera_path", type=click.Path(), default=None)
@click.option("--out", required=True, type=click.Path())
def compose(scene_path, camera_path, out):
    """Render a multi-structure scene file."""
    try:
        cam = None
        if camera_path:
            cam = Camera.from_json_dict(json.loads(Path(camera_path).read_text()))
        scene = load_scene(scene_path, camera=cam)
        res = render_scene(scene)
        save_png(res.image, out)
    except (IsorayError, OSError, ValueError, KeyError) as exc:
        raise _fail(exc)
    click.echo(f"wrote {out}")


@main.command()
@click.option("--volume", required=True, type=click.Path())
@click.option("--iso", type=float, default=None)
@click.option("--tf", "tf_path", required=True, type=click.Path())
@click.option("--camera", "camera_path", type=click.Path(), default=None)
@click.option("--size", default="512,512")
@click.option("--frames", type=int, default=50)
@click.option("--warmup", type=int, default=5)
@click.option("--out", type=click.Path(), default=None)
def bench(volume, iso, tf_path, camera_path, size, frames, warmup, out):
    """Median per-frame render times for mono, CEIR shallow/deep, and FVR.

    Timings are render-only (no PNG encode); FVR runs at the transfer
    function's reference sample distance.
    """
    if frames < 1:
        raise click.BadParameter("frames must be >= 1")
    try:
        vol = load_volume_pair(volume)
        tf, params = load_tf(tf_path, isovalue=iso)
        cam = _load_camera(camera_path, vol, _parse_pair(size))
        scene = single_iso_scene(vol, tf, params, cam)
        tf1d = TransitionalTF1D.from_enhance(tf, params)

        def time_mode(fn):
            for _ in range(warmup):
                fn()
            samples = []
            for _ in range(frames):
                t0 = time.perf_counter()
                fn()
                samples.append((time.perf_counter() - t0) * 1000.0)
            return statistics.median(samples)

        report = {
            "volume": str(volume),
            "image_dims": list(cam.image_dims),
            "frames": frames,
            "warmup": warmup,
            "modes": {
                "mono": {"median_ms": time_mode(
                    lambda: render_scene(scene, mode_override="mono"))},
                "ceir_shallow": {"median_ms": time_mode(
                    lambda: render_scene(scene, mode_override="shallow"))},
                "ceir_deep": {"median_ms": time_mode(
                    lambda: render_scene(scene, mode_override="deep"))},
                "fvr": {"median_ms": time_mode(
                    lambda: render_fvr(vol, cam, tf1d,
                                       params.std_sample_distance))},
            },
        }
    except (IsorayError, OSError, ValueError, KeyError) as exc:
        raise _fail(exc)
    text = json.dumps(report, indent=2)
    if out:
        Path(out).write_text(text)
    click.echo(text)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8077)
@click.option("--max-sessions", type=int, default=None)
@click.option("--map-size", type=int, default=None)
@click.option("--ui", "ui_dir", type=click.Path(), default=None,
              help="Serve a built web client from this directory at /ui.")
def serve(host, port, max_sessions, map_size, ui_dir):
    """Run the interactive HTTP/WebSocket service."""
    import uvicorn

    from .service import ServiceSettings, create_app

    settings = ServiceSettings.from_env()
    if max_sessions is not None:
        settings.max_sessions = max_sessions
    if map_size is not None:
        settings.map_size = map_size
    uvicorn.run(create_app(settings, ui_dir=ui_dir), host=host, port=port)


if __name__ == "__main__":
    main()
