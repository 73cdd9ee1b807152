"""Session-oriented HTTP + WebSocket facade over the rendering toolkit.

Each session owns a scene, seed sets, and peel windows. Mutations are
serialized per session and bump a revision counter; frames are rendered from
the mutated state, cached per revision, and pushed to any connected stream
as a binary message of 4 revision bytes (big-endian) followed by a PNG.
"""

from __future__ import annotations

import asyncio
import os
import secrets
import struct
from pathlib import Path
from dataclasses import dataclass, field as dc_field
from typing import Literal

import numpy as np
from fastapi import FastAPI, Request, Response, WebSocket, WebSocketDisconnect
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .camera import Camera, frame_volume
from .enhance import EnhanceParams, LocalTransferFunction, tf_from_json_dict
from .errors import ConfigError, IsorayError, SeedError
from .explore import (HIGHLIGHT_BG, HIGHLIGHT_FG, PeelWindow, SeedSets,
                      build_peel_buffer, pick_voxels)
from .imgio import image_to_png_bytes, to_uint8
from .isoseg import CutResult, build_graph, min_cut
from .raycast import CropBounds
from .scene import (LabelVolume, Scene, SingleIsoMode, SurfaceStructure,
                    bake_structure, render_scene, save_scene)
from .volume import (ScalarVolume, SyntheticSpec, generate_synthetic,
                     load_volume_pair, save_volume_pair)

DEFAULT_TF_NEAR = (0.95, 0.9, 0.8)
DEFAULT_TF_FAR = (0.5, 0.12, 0.1)


@dataclass
class ServiceSettings:
    max_sessions: int = 16
    map_size: int = 256

    @classmethod
    def from_env(cls) -> "ServiceSettings":
        return cls(max_sessions=int(os.environ.get("ISORAY_MAX_SESSIONS", "16")),
                   map_size=int(os.environ.get("ISORAY_MAP_SIZE", "256")))


class SyntheticBody(BaseModel):
    kind: str
    dims: int | list[int] = 64
    params: list[float] = Field(default_factory=list)


class CreateSessionBody(BaseModel):
    volume: str | None = None
    synthetic: SyntheticBody | None = None
    image_dims: list[int] | None = None


class CameraBody(BaseModel):
    eye: list[float]
    look_at: list[float]
    up: list[float] = [0.0, 1.0, 0.0]
    vfov: float = 40.0
    image_dims: list[int] = [512, 512]


class IsoBody(BaseModel):
    isovalue: float
    tf: dict | None = None


class PeelBody(BaseModel):
    rects: list[list[int]]


class PickBody(BaseModel):
    pixels: list[list[int]]
    target: Literal["fg", "bg"]


class StructureBody(BaseModel):
    side: Literal["fg", "bg"]
    id: int
    isovalue: float | None = None
    tf: dict | None = None


class ExportBody(BaseModel):
    path: str


class CropBody(BaseModel):
    lo: list[int]
    hi: list[int]


def _default_single_iso(vol: ScalarVolume, map_size: int,
                        isovalue: float = 0.5) -> SingleIsoMode:
    tf = LocalTransferFunction.ramp(DEFAULT_TF_NEAR, DEFAULT_TF_FAR)
    params = EnhanceParams(isovalue=isovalue, delta_v=0.1,
                           std_sample_distance=min(vol.spacing))
    return SingleIsoMode.create(tf, params, m=map_size)


@dataclass
class Session:
    id: str
    scene: Scene
    map_size: int
    volume_source: str | None = None
    seeds: SeedSets = dc_field(default_factory=SeedSets)
    peel_windows: list[PeelWindow] = dc_field(default_factory=list)
    revision: int = 1
    cut: CutResult | None = None
    cut_iso: float | None = None
    _frame_rev: int = 0
    _frame = None
    _png: bytes = b""
    lock: asyncio.Lock = dc_field(default_factory=asyncio.Lock)
    subscribers: list[asyncio.Queue] = dc_field(default_factory=list)

    def bump(self) -> None:
        self.revision += 1

    def render_frame(self):
        """Render (or reuse) the frame for the current revision; returns
        (revision, RenderResult, png bytes)."""
        if self._frame_rev != self.revision:
            w, h = self.scene.camera.image_dims
            peel = build_peel_buffer(self.peel_windows, (w, h))
            result = render_scene(self.scene, peel=peel)
            image = result.image
            # seed highlights are a picking preview; composed (labeled)
            # scenes render without the overlay
            if (self.scene.labels is None
                    and (self.seeds.foreground or self.seeds.background)):
                image = image.copy()
                ids = result.ids.ids
                if self.seeds.foreground:
                    mask = np.isin(ids, np.asarray(self.seeds.foreground))
                    image[mask] = HIGHLIGHT_FG
                if self.seeds.background:
                    mask = np.isin(ids, np.asarray(self.seeds.background))
                    image[mask] = HIGHLIGHT_BG
            self._frame = (result, image)
            self._png = image_to_png_bytes(image)
            self._frame_rev = self.revision
        result, image = self._frame
        return self.revision, result, image, self._png


def create_app(settings: ServiceSettings | None = None,
               ui_dir: str | None = None) -> FastAPI:
    settings = settings or ServiceSettings.from_env()
    app = FastAPI(title="isoray service")
    sessions: dict[str, Session] = {}
    if ui_dir is None:
        ui_dir = os.environ.get("ISORAY_UI_DIR")
    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        detail = [{"field": ".".join(str(p) for p in e["loc"]), "message": e["msg"]}
                  for e in exc.errors()]
        return JSONResponse(status_code=400, content={"detail": detail})

    @app.exception_handler(SeedError)
    async def _seed_handler(request: Request, exc: SeedError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(ConfigError)
    async def _config_handler(request: Request, exc: ConfigError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    def get_session(sid: str) -> Session:
        s = sessions.get(sid)
        if s is None:
            raise _NotFound(sid)
        return s

    class _NotFound(Exception):
        def __init__(self, sid):
            self.sid = sid

    @app.exception_handler(_NotFound)
    async def _nf_handler(request: Request, exc: _NotFound):
        return JSONResponse(status_code=404, content={"detail": f"unknown session {exc.sid}"})

    async def _rendered(session: Session):
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(None, session.render_frame)

    async def _broadcast(session: Session):
        rev, _result, _image, png = await _rendered(session)
        payload = struct.pack(">I", rev) + png
        for q in list(session.subscribers):
            q.put_nowait(payload)
        return rev

    # -- session lifecycle -------------------------------------------------

    @app.post("/sessions")
    async def create_session(body: CreateSessionBody):
        if len(sessions) >= settings.max_sessions:
            return JSONResponse(status_code=409,
                                content={"detail": "session limit reached"})
        if (body.volume is None) == (body.synthetic is None):
            raise ConfigError("provide exactly one of 'volume' or 'synthetic'")
        volume_source = None
        if body.volume is not None:
            vol = load_volume_pair(body.volume)
            volume_source = str(Path(body.volume).expanduser().resolve())
            if volume_source.endswith(".raw"):
                volume_source = volume_source[:-4]
        else:
            dims = body.synthetic.dims
            if isinstance(dims, int):
                dims = (dims, dims, dims)
            vol = generate_synthetic(SyntheticSpec(kind=body.synthetic.kind,
                                                   dims=tuple(dims),
                                                   params=tuple(body.synthetic.params)))
        image_dims = tuple(body.image_dims) if body.image_dims else (512, 512)
        scene = Scene(volume=vol,
                      camera=frame_volume(vol.extent, image_dims=image_dims),
                      single_iso=_default_single_iso(vol, settings.map_size))
        sid = secrets.token_hex(8)
        sessions[sid] = Session(id=sid, scene=scene, map_size=settings.map_size,
                                volume_source=volume_source)
        return {"id": sid, "revision": sessions[sid].revision}

    @app.delete("/sessions/{sid}")
    async def delete_session(sid: str):
        get_session(sid)
        del sessions[sid]
        return {"ok": True}

    # -- mutations ----------------------------------------------------------

    async def _apply_camera(session: Session, body: CameraBody):
        session.scene.camera = Camera(eye=tuple(body.eye), look_at=tuple(body.look_at),
                                      up=tuple(body.up), vfov_deg=body.vfov,
                                      image_dims=tuple(body.image_dims))
        session.bump()

    async def _apply_iso(session: Session, body: IsoBody):
        vol = session.scene.volume
        if body.tf is not None:
            tf, params = tf_from_json_dict(body.tf, isovalue=body.isovalue)
            session.scene.single_iso = SingleIsoMode.create(tf, params, m=session.map_size)
        else:
            session.scene.single_iso = _default_single_iso(
                vol, session.map_size, isovalue=body.isovalue)
        session.scene.labels = None
        session.scene.structures = {}
        session.bump()

    async def _apply_peel(session: Session, rects: list[list[int]] | None):
        if rects is None:
            session.peel_windows = []
        else:
            session.peel_windows = [PeelWindow(*[int(v) for v in r]) for r in rects]
        session.bump()

    async def _apply_crop(session: Session, body: CropBody):
        session.scene.crop = CropBounds(tuple(body.lo), tuple(body.hi)).clamped(
            session.scene.volume)
        session.bump()

    async def _apply_pick(session: Session, body: PickBody) -> list[int]:
        _rev, result, _image, _png = await _rendered(session)
        added = session.seeds.add(pick_voxels(result.ids, body.pixels), body.target)
        if added:
            session.bump()
        return added

    def _segment_sync(session: Session) -> dict:
        scene = session.scene
        if scene.single_iso is None:
            raise SeedError("no isovalue configured for segmentation")
        if not session.seeds.foreground or not session.seeds.background:
            raise SeedError("segmentation needs both foreground and background seeds")
        graph = build_graph(scene.volume, scene.single_iso.isovalue, session.seeds,
                            scene.crop)
        cut = min_cut(graph, session.seeds)
        session.cut = cut
        session.cut_iso = scene.single_iso.isovalue
        return {"node_count": cut.node_count, "cut_weight": cut.cut_weight,
                "solve_ms": cut.solve_time * 1000.0}

    async def _apply_structure(session: Session, body: StructureBody) -> dict:
        if session.cut is None:
            raise SeedError("run segmentation before baking structures")
        scene = session.scene
        cells = (session.cut.foreground_cells if body.side == "fg"
                 else session.cut.background_cells)
        isovalue = body.isovalue if body.isovalue is not None else session.cut_iso
        if body.tf is not None:
            tf, params = tf_from_json_dict(body.tf, isovalue=isovalue)
        else:
            base = scene.single_iso
            if base is None:
                raise ConfigError("no transfer function available for the structure")
            tf = base.tf
            params = EnhanceParams(isovalue=isovalue, delta_v=base.enhance.delta_v,
                                   std_sample_distance=base.enhance.std_sample_distance,
                                   mode=base.enhance.mode,
                                   deep_step=base.enhance.deep_step,
                                   deep_max_steps=base.enhance.deep_max_steps)
        if scene.labels is None:
            scene.labels = LabelVolume.empty(scene.volume)
        bake_structure(scene.labels, cells, body.id)
        scene.structures[body.id] = SurfaceStructure.create(
            body.id, tf, params, m=session.map_size)
        session.bump()
        return {"id": body.id, "cells": len(cells)}

    @app.put("/sessions/{sid}/camera")
    async def put_camera(sid: str, body: CameraBody):
        session = get_session(sid)
        async with session.lock:
            await _apply_camera(session, body)
            rev = await _broadcast(session)
        return {"revision": rev}

    @app.put("/sessions/{sid}/iso")
    async def put_iso(sid: str, body: IsoBody):
        session = get_session(sid)
        async with session.lock:
            await _apply_iso(session, body)
            rev = await _broadcast(session)
        return {"revision": rev}

    @app.put("/sessions/{sid}/crop")
    async def put_crop(sid: str, body: CropBody):
        session = get_session(sid)
        async with session.lock:
            await _apply_crop(session, body)
            rev = await _broadcast(session)
        return {"revision": rev}

    @app.post("/sessions/{sid}/peel-windows")
    async def post_peel(sid: str, body: PeelBody):
        session = get_session(sid)
        async with session.lock:
            await _apply_peel(session, body.rects)
            rev = await _broadcast(session)
        return {"revision": rev}

    @app.delete("/sessions/{sid}/peel-windows")
    async def delete_peel(sid: str):
        session = get_session(sid)
        async with session.lock:
            await _apply_peel(session, None)
            rev = await _broadcast(session)
        return {"revision": rev}

    @app.post("/sessions/{sid}/pick")
    async def post_pick(sid: str, body: PickBody):
        session = get_session(sid)
        async with session.lock:
            added = await _apply_pick(session, body)
            rev = await _broadcast(session) if added else session.revision
        return {"added": added, "revision": rev}

    @app.post("/sessions/{sid}/segment")
    async def post_segment(sid: str):
        session = get_session(sid)
        async with session.lock:
            loop = asyncio.get_running_loop()
            result = await loop.run_in_executor(None, _segment_sync, session)
        return result

    @app.post("/sessions/{sid}/structures")
    async def post_structure(sid: str, body: StructureBody):
        session = get_session(sid)
        async with session.lock:
            info = await _apply_structure(session, body)
            rev = await _broadcast(session)
        info["revision"] = rev
        return info

    @app.post("/sessions/{sid}/export")
    async def export_scene(sid: str, body: ExportBody):
        session = get_session(sid)
        async with session.lock:
            scene = session.scene
            if scene.labels is None:
                raise SeedError("nothing to export: no structures baked yet")
            base = Path(body.path).expanduser().resolve()
            base.parent.mkdir(parents=True, exist_ok=True)
            if session.volume_source is not None:
                volume_ref = session.volume_source
            else:
                save_volume_pair(scene.volume, base.with_name(base.name + "_volume"))
                volume_ref = base.name + "_volume"
            scene_path = base.with_suffix(".scene.json")
            save_scene(scene, scene_path, volume_ref=volume_ref)
        return {"scene": str(scene_path)}

    @app.get("/sessions/{sid}/structures")
    async def get_structures(sid: str):
        session = get_session(sid)
        scene = session.scene
        hist = scene.labels.histogram() if scene.labels is not None else {}
        return {"structures": [
            {"id": sid_, "isovalue": st.isovalue, "mode": st.enhance.mode,
             "cells": hist.get(sid_, 0)}
            for sid_, st in sorted(scene.structures.items())]}

    @app.delete("/sessions/{sid}/seeds")
    async def delete_seeds(sid: str):
        session = get_session(sid)
        async with session.lock:
            session.seeds.clear()
            session.bump()
            rev = await _broadcast(session)
        return {"revision": rev}

    # -- frames --------------------------------------------------------------

    @app.get("/sessions/{sid}/frame")
    async def get_frame(sid: str, request: Request):
        session = get_session(sid)
        async with session.lock:
            rev, result, image, png = await _rendered(session)
        accept = request.headers.get("accept", "")
        headers = {"X-Revision": str(rev)}
        if "application/octet-stream" in accept:
            h, w, _ = image.shape
            rgba = np.dstack([to_uint8(image),
                              np.full((h, w), 255, np.uint8)]).tobytes()
            headers.update({"X-Width": str(w), "X-Height": str(h)})
            return Response(content=rgba, media_type="application/octet-stream",
                            headers=headers)
        return Response(content=png, media_type="image/png", headers=headers)

    @app.get("/sessions/{sid}/ids")
    async def get_ids(sid: str):
        session = get_session(sid)
        async with session.lock:
            rev, result, _image, _png = await _rendered(session)
        h, w = result.ids.ids.shape
        return Response(content=result.ids.ids.astype("<i4").tobytes(),
                        media_type="application/octet-stream",
                        headers={"X-Revision": str(rev), "X-Width": str(w),
                                 "X-Height": str(h)})

    # -- websocket stream ------------------------------------------------------

    async def _handle_ws_command(session: Session, msg: dict) -> dict:
        op = msg.get("op")
        body = {k: v for k, v in msg.items() if k != "op"}
        async with session.lock:
            if op == "camera":
                await _apply_camera(session, CameraBody(**body))
            elif op == "iso":
                await _apply_iso(session, IsoBody(**body))
            elif op == "crop":
                await _apply_crop(session, CropBody(**body))
            elif op == "peel-windows":
                await _apply_peel(session, PeelBody(**body).rects)
            elif op == "clear-peel":
                await _apply_peel(session, None)
            elif op == "pick":
                added = await _apply_pick(session, PickBody(**body))
                if added:
                    await _broadcast(session)
                return {"op": op, "ok": True, "result": {"added": added},
                        "revision": session.revision}
            elif op == "segment":
                loop = asyncio.get_running_loop()
                result = await loop.run_in_executor(None, _segment_sync, session)
                return {"op": op, "ok": True, "result": result,
                        "revision": session.revision}
            elif op == "structures":
                info = await _apply_structure(session, StructureBody(**body))
                await _broadcast(session)
                return {"op": op, "ok": True, "result": info,
                        "revision": session.revision}
            elif op == "clear-seeds":
                session.seeds.clear()
                session.bump()
            else:
                return {"op": op, "ok": False, "error": f"unknown op {op!r}"}
            await _broadcast(session)
            return {"op": op, "ok": True, "revision": session.revision}

    @app.websocket("/sessions/{sid}/stream")
    async def stream(ws: WebSocket, sid: str):
        session = sessions.get(sid)
        if session is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue()
        session.subscribers.append(queue)

        async def sender():
            while True:
                payload = await queue.get()
                await ws.send_bytes(payload)

        send_task = asyncio.create_task(sender())
        try:
            async with session.lock:
                rev, _result, _image, png = await _rendered(session)
            queue.put_nowait(struct.pack(">I", rev) + png)
            while True:
                msg = await ws.receive_json()
                try:
                    reply = await _handle_ws_command(session, msg)
                except (IsorayError, TypeError, ValueError) as exc:
                    reply = {"op": msg.get("op"), "ok": False, "error": str(exc)}
                await ws.send_json(reply)
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            if queue in session.subscribers:
                session.subscribers.remove(queue)

    return app


app = create_app()
