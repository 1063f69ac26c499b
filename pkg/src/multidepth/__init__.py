"""multidepth: parallel multi-camera depth rendering for legged-robot
simulation, with procedural terrain, sensor realism, perception
shaping, and geometric reward oracles.

The renderer casts one ray per (environment, camera, pixel) against
static terrain and per-environment rigid bodies. Body geometry is
prebuilt once into local-frame BVHs; pose changes only re-express rays,
so per-frame cost is independent of mesh size changes from motion. A
numba-compiled kernel is the default backend with a pure-numpy fallback
(``MULTIDEPTH_BACKEND=numpy``); ``MULTIDEPTH_THREADS`` caps worker
threads.
"""

from .transforms import (RigidPose, Ray, quat_identity, quat_normalize,
                         quat_mul, quat_conjugate, quat_rotate,
                         quat_to_matrix, quat_from_matrix,
                         quat_from_axis_angle, quat_from_euler, quat_yaw,
                         world_to_body_ray, body_to_world_ray)
from .mesh import (TriMesh, load_obj, save_obj, make_box, make_plane,
                   make_icosphere, merge_meshes)
from .bvh import BVH, build_bvh, query_bvh, validate_bvh
from .camera import CameraModel, build_depth_ray, look_at_pose
from .scene import (Scene, Body, DepthFrame, render, render_naive_baseline,
                    depth_to_z)
from .kernels import BACKENDS, default_backend, resolve_threads
from .terrain import (TerrainSpec, HeightField, EdgeMask, TERRAIN_KINDS,
                      generate_terrain, compute_edge_mask, foothold_validity)
from .sensor import (SensorConfig, CameraRandomization, FrameBuffer,
                     apply_noise_dropout, downsample_min, sample_latencies,
                     sample_camera_offsets, randomize_scene_cameras,
                     randomized_camera)
from .perception import (DfsvConfig, VelocityCommand, dfsv_scales, dfsv_fuse,
                         camera_forward_xy, RsmConfig, RSM_MODES,
                         rsm_sample_modes, rsm_mask_columns, rsm_apply,
                         HeightMapConfig, HeightMapObs, extract_height_map,
                         extract_height_maps)
from .rewards import (FootState, TorsoRewardConfig, foot_edge_penalty,
                      foothold_coverage, torso_orientation_reward)
from .config import (ConfigError, parse_config, serialize_config, load_config,
                     RunConfig, terrain_spec_from_config, scene_from_config,
                     run_config_from_config, sensor_config_from_config,
                     dfsv_config_from_config, rsm_config_from_config,
                     camera_randomization_from_config, body_specs_from_config,
                     cameras_from_config, BodySpec)
from .frameio import (write_frames, read_frames, write_grid, read_grid,
                      write_pgm, read_pgm, depth_to_u8)

__version__ = "0.1.0"

__all__ = [
    "RigidPose", "Ray", "quat_identity", "quat_normalize", "quat_mul",
    "quat_conjugate", "quat_rotate", "quat_to_matrix", "quat_from_matrix",
    "quat_from_axis_angle", "quat_from_euler", "quat_yaw",
    "world_to_body_ray", "body_to_world_ray",
    "TriMesh", "load_obj", "save_obj", "make_box", "make_plane",
    "make_icosphere", "merge_meshes",
    "BVH", "build_bvh", "query_bvh", "validate_bvh",
    "CameraModel", "build_depth_ray", "look_at_pose",
    "Scene", "Body", "DepthFrame", "render", "render_naive_baseline",
    "depth_to_z",
    "BACKENDS", "default_backend", "resolve_threads",
    "TerrainSpec", "HeightField", "EdgeMask", "TERRAIN_KINDS",
    "generate_terrain", "compute_edge_mask", "foothold_validity",
    "SensorConfig", "CameraRandomization", "FrameBuffer",
    "apply_noise_dropout", "downsample_min", "sample_latencies",
    "sample_camera_offsets", "randomize_scene_cameras", "randomized_camera",
    "DfsvConfig", "VelocityCommand", "dfsv_scales", "dfsv_fuse",
    "camera_forward_xy", "RsmConfig", "RSM_MODES", "rsm_sample_modes",
    "rsm_mask_columns", "rsm_apply", "HeightMapConfig", "HeightMapObs",
    "extract_height_map", "extract_height_maps",
    "FootState", "TorsoRewardConfig", "foot_edge_penalty",
    "foothold_coverage", "torso_orientation_reward",
    "ConfigError", "parse_config", "serialize_config", "load_config",
    "RunConfig", "terrain_spec_from_config", "scene_from_config",
    "run_config_from_config", "sensor_config_from_config",
    "dfsv_config_from_config", "rsm_config_from_config",
    "camera_randomization_from_config", "body_specs_from_config",
    "cameras_from_config", "BodySpec",
    "write_frames", "read_frames", "write_grid", "read_grid", "write_pgm",
    "read_pgm", "depth_to_u8",
    "__version__",
]
