"""Isosurface ray casting with neighborhood-density color enhancement and
interactive scene exploration (peeling, picking, surface segmentation,
multi-structure recombination)."""

from .camera import Camera, Ray, frame_volume, pixel_ray
from .enhance import (EnhanceParams, Light, LocalTransferFunction,
                      MaterialSample, ShadingParams, SpeedColorMap,
                      accumulate_color, build_speed_color_map, lookup_color,
                      per_sample_alpha, rate_deep, rate_shallow, shade)
from .errors import ConfigError, FormatError, IsorayError, SeedError
from .explore import (MISS, PeelBuffer, PeelWindow, SeedSets, VoxelIdBuffer,
                      build_peel_buffer, pick_voxels, selection_color)
from .fvr import TransitionalTF1D, eval_tf, render_fvr
from .isoseg import (CutResult, IsoGraph, build_graph, cell_contains_iso,
                     face_contour_length, min_cut)
from .raycast import (CellStep, CropBounds, CubicPoly, Hit, cubic_from_samples,
                      cubic_roots, first_root, intersect_isosurface,
                      linear_cell_id, cell_index_from_id, traverse_cells)
from .scene import (LabelVolume, RenderResult, Scene, SingleIsoMode,
                    SurfaceStructure, bake_structure, load_scene, render_scene,
                    save_scene, single_iso_scene)
from .volume import (ScalarVolume, SyntheticSpec, VolumeMeta, generate_synthetic,
                     gradient_central, load_volume, load_volume_pair,
                     sample_trilinear, save_volume_pair)

__version__ = "0.1.0"
