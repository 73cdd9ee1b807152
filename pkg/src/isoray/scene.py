"""Multi-surface-structure scenes and the first-hit renderer.

An 8-bit label per cell selects which structure's isovalue and speed-color
map apply inside that cell (0 marks empty cells). Rendering is first-hit:
rays skip unlabeled cells, intersect the labeled cell's isosurface at
sub-cell precision, and shade with that structure's lookup row. The same
path renders plain single-isosurface scenes by treating every cell as
belonging to one implicit structure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels as _k
from .camera import Camera, frame_volume
from .enhance import (DEFAULT_LIGHTS, DEFAULT_MAP_SIZE, EnhanceParams, Light,
                      LocalTransferFunction, ShadingParams, SpeedColorMap,
                      build_speed_color_map, lights_arrays, load_tf,
                      tf_from_json_dict, tf_to_json_dict)
from .errors import ConfigError, FormatError
from .explore import MISS, PeelBuffer, VoxelIdBuffer
from .raycast import CropBounds
from .volume import ScalarVolume, load_volume_pair

_MODE_CODE = {"mono": _k.MODE_MONO, "shallow": _k.MODE_SHALLOW, "deep": _k.MODE_DEEP}


class LabelVolume:
    """Per-cell u8 structure ids over the volume's cell grid; 0 = empty."""

    def __init__(self, labels: np.ndarray):
        self.labels = np.ascontiguousarray(labels, dtype=np.uint8)

    @classmethod
    def empty(cls, vol: ScalarVolume) -> "LabelVolume":
        ncx, ncy, ncz = vol.cell_dims
        return cls(np.zeros((ncz, ncy, ncx), dtype=np.uint8))

    @property
    def cell_dims(self) -> tuple[int, int, int]:
        ncz, ncy, ncx = self.labels.shape
        return (ncx, ncy, ncz)

    @property
    def flat(self) -> np.ndarray:
        return self.labels.reshape(-1)

    def histogram(self) -> dict[int, int]:
        ids, counts = np.unique(self.labels, return_counts=True)
        return {int(i): int(c) for i, c in zip(ids, counts)}


def bake_structure(labels: LabelVolume, cells, structure_id: int) -> LabelVolume:
    """Stamp a structure id over a set of linear cell ids (last bake wins)."""
    if not 1 <= structure_id <= 255:
        raise ConfigError(f"structure id must be in 1..255, got {structure_id}")
    idx = np.asarray(sorted(int(c) for c in cells), dtype=np.int64)
    if idx.size:
        flat = labels.flat
        if idx[0] < 0 or idx[-1] >= flat.shape[0]:
            raise ConfigError("cell id outside the label grid")
        flat[idx] = structure_id
    return labels


@dataclass(frozen=True)
class SurfaceStructure:
    """One extracted surface: its isovalue, transfer function, and lookup row."""

    id: int
    isovalue: float
    tf: LocalTransferFunction
    enhance: EnhanceParams
    lut_row: SpeedColorMap
    base_color: tuple[float, float, float] | None = None

    def __post_init__(self):
        if not 1 <= self.id <= 255:
            raise ConfigError(f"structure id must be in 1..255, got {self.id}")

    @classmethod
    def create(cls, structure_id: int, tf: LocalTransferFunction,
               enhance: EnhanceParams, m: int = DEFAULT_MAP_SIZE,
               base_color=None) -> "SurfaceStructure":
        return cls(id=structure_id, isovalue=enhance.isovalue, tf=tf,
                   enhance=enhance,
                   lut_row=build_speed_color_map(tf, m, literal=enhance.literal_alpha),
                   base_color=base_color)

    def resolved_base_color(self) -> tuple[float, float, float]:
        if self.base_color is not None:
            return self.base_color
        return self.tf.entries[-1][1]


@dataclass(frozen=True)
class SingleIsoMode:
    """Structure-like parameters for rendering an unlabeled volume."""

    isovalue: float
    tf: LocalTransferFunction
    enhance: EnhanceParams
    lut_row: SpeedColorMap
    base_color: tuple[float, float, float] | None = None

    @classmethod
    def create(cls, tf: LocalTransferFunction, enhance: EnhanceParams,
               m: int = DEFAULT_MAP_SIZE, base_color=None) -> "SingleIsoMode":
        return cls(isovalue=enhance.isovalue, tf=tf, enhance=enhance,
                   lut_row=build_speed_color_map(tf, m, literal=enhance.literal_alpha),
                   base_color=base_color)

    def resolved_base_color(self) -> tuple[float, float, float]:
        if self.base_color is not None:
            return self.base_color
        return self.tf.entries[-1][1]


@dataclass
class Scene:
    volume: ScalarVolume
    camera: Camera
    labels: LabelVolume | None = None
    structures: dict[int, SurfaceStructure] = field(default_factory=dict)
    single_iso: SingleIsoMode | None = None
    crop: CropBounds | None = None
    lights: tuple[Light, ...] = DEFAULT_LIGHTS
    background: tuple[float, float, float] = (0.0, 0.0, 0.0)
    shading: ShadingParams = ShadingParams()

    def validate(self) -> None:
        if self.labels is not None:
            if self.labels.cell_dims != self.volume.cell_dims:
                raise ConfigError(
                    f"label grid {self.labels.cell_dims} != cell grid {self.volume.cell_dims}")
            present = set(int(v) for v in np.unique(self.labels.labels)) - {0}
            missing = present - set(self.structures)
            if missing:
                raise ConfigError(f"labels reference undefined structures {sorted(missing)}")
        elif self.single_iso is None:
            raise ConfigError("scene needs either a label volume or single-iso parameters")


@dataclass(frozen=True)
class RenderResult:
    image: np.ndarray          # (h, w, 3) float64 in [0, 1]
    ids: VoxelIdBuffer
    structure_ids: np.ndarray  # (h, w) uint8, 0 where miss or single-iso
    t: np.ndarray              # (h, w) float64, -1 where miss

    def hit_mask(self) -> np.ndarray:
        return self.ids.ids != MISS


def _structure_tables(scene: Scene, mode_override: str | None):
    """Pack per-structure parameters into the 256-row arrays the kernel reads."""
    m = DEFAULT_MAP_SIZE
    entries: list[tuple[int, object]] = []
    if scene.labels is None:
        entries.append((0, scene.single_iso))
        m = scene.single_iso.lut_row.m
    else:
        for sid, st in scene.structures.items():
            entries.append((sid, st))
            m = st.lut_row.m
    s_iso = np.zeros(256, np.float64)
    s_dv = np.full(256, 1e-3, np.float64)
    s_df = np.ones(256, np.float64)
    s_mode = np.zeros(256, np.uint8)
    s_dstep = np.full(256, 0.5 * min(scene.volume.spacing), np.float64)
    s_dmax = np.full(256, 256, np.int64)
    s_base = np.zeros((256, 3), np.float64)
    lut = np.zeros((256, m, 3), np.float64)
    for sid, st in entries:
        if st.lut_row.m != m:
            raise ConfigError("all structures must share one speed-color map size")
        p = st.enhance
        s_iso[sid] = st.isovalue
        s_dv[sid] = p.delta_v
        s_df[sid] = p.density_factor
        s_mode[sid] = _MODE_CODE[mode_override or p.mode]
        s_dstep[sid] = p.resolved_deep_step(scene.volume)
        s_dmax[sid] = p.deep_max_steps
        s_base[sid] = st.resolved_base_color()
        lut[sid] = st.lut_row.colors
    return s_iso, s_dv, s_df, s_mode, s_dstep, s_dmax, s_base, lut


def render_scene(scene: Scene, peel: PeelBuffer | None = None,
                 mode_override: str | None = None,
                 shaded: bool = True) -> RenderResult:
    """Render the scene first-hit; returns the image plus picking buffers.

    ``mode_override`` forces 'mono', 'shallow' or 'deep' coloring for every
    structure; ``shaded=False`` returns raw material colors (no lighting).
    Peel counts make each pixel skip that many crossings.
    """
    scene.validate()
    if mode_override is not None and mode_override not in _MODE_CODE:
        raise ConfigError(f"unknown mode {mode_override!r}")
    vol = scene.volume
    cam = scene.camera
    w, h = cam.image_dims
    crop = scene.crop or CropBounds.full(vol)
    if peel is None:
        peel = PeelBuffer.zeros((w, h))
    if peel.image_dims != (w, h):
        raise ConfigError(f"peel buffer {peel.image_dims} != image {(w, h)}")
    bounds4 = vol.cell_bounds_packed()
    tables = _structure_tables(scene, mode_override)
    right, up_v, fwd, half_w, half_h = cam.basis()
    ldirs, lcols = lights_arrays(scene.lights)
    has_labels = scene.labels is not None
    labels = scene.labels.labels if has_labels else np.zeros((1, 1, 1), np.uint8)
    out_img = np.empty((h, w, 3), np.float64)
    out_id = np.empty((h, w), np.int32)
    out_sid = np.empty((h, w), np.uint8)
    out_t = np.empty((h, w), np.float64)
    sx, sy, sz = vol.spacing
    _k.render_scene_tiles(
        vol.grid, sx, sy, sz, has_labels, labels, bounds4,
        crop.lo[0], crop.lo[1], crop.lo[2], crop.hi[0], crop.hi[1], crop.hi[2],
        float(cam.eye[0]), float(cam.eye[1]), float(cam.eye[2]),
        right[0], right[1], right[2], up_v[0], up_v[1], up_v[2],
        fwd[0], fwd[1], fwd[2], half_w, half_h, w, h, peel.counts,
        *tables, shaded, scene.shading.ambient, scene.shading.diffuse,
        scene.shading.specular, scene.shading.shininess, ldirs, lcols,
        float(scene.background[0]), float(scene.background[1]), float(scene.background[2]),
        out_img, out_id, out_sid, out_t)
    return RenderResult(image=out_img, ids=VoxelIdBuffer(out_id),
                        structure_ids=out_sid, t=out_t)


def single_iso_scene(vol: ScalarVolume, tf: LocalTransferFunction,
                     enhance: EnhanceParams, camera: Camera | None = None,
                     m: int = DEFAULT_MAP_SIZE, crop: CropBounds | None = None,
                     base_color=None) -> Scene:
    """Convenience constructor for plain one-isosurface rendering."""
    cam = camera or frame_volume(vol.extent)
    return Scene(volume=vol, camera=cam,
                 single_iso=SingleIsoMode.create(tf, enhance, m, base_color),
                 crop=crop)


# ---------------------------------------------------------------------------
# Scene files


def save_scene(scene: Scene, path: str | Path, volume_ref: str,
               tf_refs: dict[int, str] | None = None,
               map_size: int | None = None) -> None:
    """Write <name>.scene.json plus the label grid and per-structure TFs."""
    path = Path(path)
    stem = path.name
    for suffix in (".json", ".scene"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
    base = path.parent / stem
    label_ref = f"{base.name}.labels.u8"
    structures = []
    for sid, st in sorted(scene.structures.items()):
        if tf_refs and sid in tf_refs:
            tf_ref = tf_refs[sid]
        else:
            tf_ref = f"{base.name}.tf{sid}.json"
            (path.parent / tf_ref).write_text(
                json.dumps(tf_to_json_dict(st.tf, st.enhance), indent=2))
        structures.append({"id": sid, "isovalue": st.isovalue, "tf_ref": tf_ref})
    if scene.labels is None:
        raise ConfigError("cannot save a scene without a label volume")
    scene.labels.labels.tofile(path.parent / label_ref)
    if map_size is None and scene.structures:
        map_size = next(iter(scene.structures.values())).lut_row.m
    doc = {
        "volume_ref": volume_ref,
        "crop": {"lo": list((scene.crop or CropBounds.full(scene.volume)).lo),
                 "hi": list((scene.crop or CropBounds.full(scene.volume)).hi)},
        "camera": scene.camera.to_json_dict(),
        "structures": structures,
        "label_ref": label_ref,
        "map_size": map_size or DEFAULT_MAP_SIZE,
    }
    path.write_text(json.dumps(doc, indent=2))


def load_scene(path: str | Path, camera: Camera | None = None) -> Scene:
    """Load a .scene.json file; paths inside resolve relative to the file."""
    path = Path(path)
    doc = json.loads(path.read_text())
    root = path.parent
    vol = load_volume_pair(root / doc["volume_ref"])
    ncx, ncy, ncz = vol.cell_dims
    raw = np.fromfile(root / doc["label_ref"], dtype=np.uint8)
    if raw.size != ncx * ncy * ncz:
        raise FormatError(
            f"label grid size {raw.size} != cell count {ncx * ncy * ncz}")
    labels = LabelVolume(raw.reshape(ncz, ncy, ncx))
    m = int(doc.get("map_size", DEFAULT_MAP_SIZE))
    structures = {}
    for sdoc in doc["structures"]:
        tf, params = load_tf(root / sdoc["tf_ref"], isovalue=sdoc.get("isovalue"))
        structures[int(sdoc["id"])] = SurfaceStructure.create(int(sdoc["id"]), tf,
                                                              params, m=m)
    cam = camera or Camera.from_json_dict(doc["camera"])
    crop = None
    if "crop" in doc and doc["crop"]:
        crop = CropBounds(tuple(doc["crop"]["lo"]), tuple(doc["crop"]["hi"]))
    scene = Scene(volume=vol, camera=cam, labels=labels,
                  structures=structures, crop=crop)
    scene.validate()
    return scene
