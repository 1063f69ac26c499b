"""Batched multi-environment scenes and depth rendering.

A Scene owns immutable geometry (body meshes in their local frames, one
static terrain mesh in the world frame, each with a BVH built exactly
once) plus mutable per-environment state: body poses, and optional
per-environment camera offsets. Rendering never rebuilds a BVH; world
rays are transformed into each body's frame instead. `render_naive_baseline`
is the deliberately costly alternative that re-transforms vertices and
rebuilds every body BVH per environment per frame, kept as the benchmark
and correctness counterpart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .bvh import BVH, build_bvh
from .camera import CameraModel
from .mesh import TriMesh
from .transforms import RigidPose, quat_identity


@dataclass(frozen=True)
class Body:
    name: str
    mesh: TriMesh
    bvh: BVH


@dataclass
class DepthFrame:
    """Range-depth tensor [env, camera, row, col] in meters."""

    data: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        if self.data.ndim != 4:
            raise ValueError(f"depth data must be 4-D (N,C,H,W), got {self.data.shape}")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape


@dataclass(frozen=True)
class FlatGeometry:
    """BVH forest in flat arrays, the form the render backends consume.

    Body trees are concatenated with child/leaf indices pre-offset;
    `body_root[b]` is body b's root node. Terrain keeps its own arrays
    (prefix g_) since it is queried in the world frame.
    """

    body_root: np.ndarray         # (B,) int32
    node_min: np.ndarray          # (M, 3) float64
    node_max: np.ndarray
    left: np.ndarray              # (M,) int32
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    tri_v0: np.ndarray            # (F, 3) float64
    tri_v1: np.ndarray
    tri_v2: np.ndarray
    body_tri_offsets: np.ndarray  # (B+1,) int64
    g_node_min: np.ndarray
    g_node_max: np.ndarray
    g_left: np.ndarray
    g_right: np.ndarray
    g_start: np.ndarray
    g_count: np.ndarray
    g_tri_v0: np.ndarray
    g_tri_v1: np.ndarray
    g_tri_v2: np.ndarray


def _empty_nodes() -> dict:
    return dict(
        node_min=np.zeros((0, 3)), node_max=np.zeros((0, 3)),
        left=np.zeros(0, np.int32), right=np.zeros(0, np.int32),
        start=np.zeros(0, np.int32), count=np.zeros(0, np.int32),
        tri_v0=np.zeros((0, 3)), tri_v1=np.zeros((0, 3)), tri_v2=np.zeros((0, 3)),
    )


def flatten_geometry(body_bvhs: list[BVH], terrain_bvh: BVH | None) -> FlatGeometry:
    if body_bvhs:
        roots, tri_offsets = [], [0]
        node_min, node_max, left, right, start, count = [], [], [], [], [], []
        v0, v1, v2 = [], [], []
        node_off = 0
        tri_off = 0
        for bvh in body_bvhs:
            roots.append(node_off)
            node_min.append(bvh.node_min)
            node_max.append(bvh.node_max)
            child_l = bvh.left.copy()
            child_r = bvh.right.copy()
            child_l[child_l >= 0] += node_off
            child_r[child_r >= 0] += node_off
            left.append(child_l)
            right.append(child_r)
            start.append(bvh.start + np.int32(tri_off))
            count.append(bvh.count)
            v0.append(bvh.tri_v0)
            v1.append(bvh.tri_v1)
            v2.append(bvh.tri_v2)
            node_off += bvh.num_nodes
            tri_off += bvh.num_triangles
            tri_offsets.append(tri_off)
        bodies = dict(
            node_min=np.ascontiguousarray(np.vstack(node_min)),
            node_max=np.ascontiguousarray(np.vstack(node_max)),
            left=np.ascontiguousarray(np.concatenate(left)),
            right=np.ascontiguousarray(np.concatenate(right)),
            start=np.ascontiguousarray(np.concatenate(start)),
            count=np.ascontiguousarray(np.concatenate(count)),
            tri_v0=np.ascontiguousarray(np.vstack(v0)),
            tri_v1=np.ascontiguousarray(np.vstack(v1)),
            tri_v2=np.ascontiguousarray(np.vstack(v2)),
        )
        body_root = np.asarray(roots, dtype=np.int32)
        body_tri_offsets = np.asarray(tri_offsets, dtype=np.int64)
    else:
        bodies = _empty_nodes()
        body_root = np.zeros(0, np.int32)
        body_tri_offsets = np.zeros(1, np.int64)

    if terrain_bvh is not None:
        terrain = dict(
            g_node_min=terrain_bvh.node_min, g_node_max=terrain_bvh.node_max,
            g_left=terrain_bvh.left, g_right=terrain_bvh.right,
            g_start=terrain_bvh.start, g_count=terrain_bvh.count,
            g_tri_v0=terrain_bvh.tri_v0, g_tri_v1=terrain_bvh.tri_v1,
            g_tri_v2=terrain_bvh.tri_v2,
        )
    else:
        terrain = {f"g_{k}": v for k, v in _empty_nodes().items()
                   if not k.startswith("tri_")}
        terrain.update(g_tri_v0=np.zeros((0, 3)), g_tri_v1=np.zeros((0, 3)),
                       g_tri_v2=np.zeros((0, 3)))

    return FlatGeometry(body_root=body_root, body_tri_offsets=body_tri_offsets,
                        **bodies, **terrain)


class Scene:
    """Geometry shared by all environments + per-environment poses.

    Every environment sees the same terrain and the same set of body
    meshes, but each environment has its own body poses and camera
    offsets, so environments are mutually invisible independent worlds.
    Poses may be changed between renders, never during one.
    """

    def __init__(self, num_envs: int, bodies=(), cameras=(), terrain: TriMesh | None = None):
        if num_envs < 1:
            raise ValueError("num_envs must be >= 1")
        self.num_envs = int(num_envs)

        body_list: list[Body] = []
        for i, entry in enumerate(bodies):
            if isinstance(entry, Body):
                body_list.append(entry)
                continue
            if isinstance(entry, tuple):
                name, mesh = entry
            else:
                name, mesh = f"body{i}", entry
            if mesh.num_faces == 0:
                raise ValueError(f"body {name!r} has no triangles")
            body_list.append(Body(str(name), mesh, build_bvh(mesh)))
        self.bodies: tuple[Body, ...] = tuple(body_list)

        cams = tuple(cameras)
        if not cams:
            raise ValueError("scene needs at least one camera")
        h, w = cams[0].height, cams[0].width
        for cam in cams:
            if (cam.height, cam.width) != (h, w):
                raise ValueError("all cameras in a scene must share one resolution")
            if cam.parent_body is not None and not (0 <= cam.parent_body < len(self.bodies)):
                raise ValueError(
                    f"camera {cam.name!r} parent_body {cam.parent_body} out of range")
        self.cameras: tuple[CameraModel, ...] = cams
        self.height, self.width = h, w

        self.terrain: TriMesh | None = terrain
        self.terrain_bvh: BVH | None = None
        if terrain is not None:
            if terrain.num_faces == 0:
                raise ValueError("terrain mesh has no triangles")
            self.terrain_bvh = build_bvh(terrain)

        n, b = self.num_envs, len(self.bodies)
        self.body_positions = np.zeros((n, b, 3))
        self.body_rotations = np.tile(quat_identity(), (n, b, 1))

        c = len(cams)
        self._rand_pos: np.ndarray | None = None   # (N, C, 3)
        self._rand_rot: np.ndarray | None = None   # (N, C, 4)
        self._rand_fov: np.ndarray | None = None   # (N, C)
        self._rand_generation = 0

        self._flat: FlatGeometry | None = None
        self._base_rays: tuple[np.ndarray, np.ndarray] | None = None
        self._rand_rays: tuple[int, np.ndarray, np.ndarray] | None = None
        self.d_max_per_camera = np.array([cam.d_max for cam in cams])

    # -- sizes ---------------------------------------------------------
    @property
    def num_bodies(self) -> int:
        return len(self.bodies)

    @property
    def num_cameras(self) -> int:
        return len(self.cameras)

    @property
    def frame_shape(self) -> tuple[int, int, int, int]:
        return (self.num_envs, self.num_cameras, self.height, self.width)

    # -- pose state ----------------------------------------------------
    def set_body_pose(self, env: int, body: int, pose: RigidPose) -> None:
        if not (0 <= env < self.num_envs):
            raise ValueError(f"env {env} out of range [0, {self.num_envs})")
        if not (0 <= body < self.num_bodies):
            raise ValueError(f"body {body} out of range [0, {self.num_bodies})")
        self.body_positions[env, body] = pose.translation
        self.body_rotations[env, body] = pose.rotation

    def set_body_poses(self, positions, rotations) -> None:
        positions = np.asarray(positions, dtype=np.float64)
        rotations = np.asarray(rotations, dtype=np.float64)
        expect_p = (self.num_envs, self.num_bodies, 3)
        expect_r = (self.num_envs, self.num_bodies, 4)
        if positions.shape != expect_p or rotations.shape != expect_r:
            raise ValueError(
                f"expected poses shaped {expect_p} / {expect_r}, "
                f"got {positions.shape} / {rotations.shape}")
        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(rotations))):
            raise ValueError("poses must be finite")
        norms = np.linalg.norm(rotations, axis=-1, keepdims=True)
        if np.any(norms < 1e-12):
            raise ValueError("zero quaternion in body rotations")
        self.body_positions = np.ascontiguousarray(positions)
        self.body_rotations = np.ascontiguousarray(rotations / norms)

    def body_pose(self, env: int, body: int) -> RigidPose:
        return RigidPose(self.body_positions[env, body], self.body_rotations[env, body])

    # -- camera randomization -------------------------------------------
    def set_camera_randomization(self, offset_pos, offset_rot, fov_delta) -> None:
        """Per-(env, camera) mount offsets and FOV deltas.

        offset_pos (N,C,3), offset_rot (N,C,4) applied after the mount
        pose; fov_delta (N,C) degrees added to both FOVs.
        """
        n, c = self.num_envs, self.num_cameras
        offset_pos = np.asarray(offset_pos, dtype=np.float64)
        offset_rot = np.asarray(offset_rot, dtype=np.float64)
        fov_delta = np.asarray(fov_delta, dtype=np.float64)
        if offset_pos.shape != (n, c, 3) or offset_rot.shape != (n, c, 4) \
                or fov_delta.shape != (n, c):
            raise ValueError("camera randomization arrays have wrong shapes")
        norms = np.linalg.norm(offset_rot, axis=-1, keepdims=True)
        self._rand_pos = np.ascontiguousarray(offset_pos)
        self._rand_rot = np.ascontiguousarray(offset_rot / norms)
        self._rand_fov = np.ascontiguousarray(fov_delta)
        self._rand_generation += 1

    def clear_camera_randomization(self) -> None:
        self._rand_pos = self._rand_rot = self._rand_fov = None
        self._rand_generation += 1

    def camera_world_poses(self) -> tuple[np.ndarray, np.ndarray]:
        """(N,C,3) positions and (N,C,4) rotations: parent pose ∘ mount ∘ offset."""
        n, c = self.num_envs, self.num_cameras
        pos = np.empty((n, c, 3))
        rot = np.empty((n, c, 4))
        for ci, cam in enumerate(self.cameras):
            for e in range(n):
                if cam.parent_body is None:
                    pose = cam.mount
                else:
                    pose = self.body_pose(e, cam.parent_body).compose(cam.mount)
                if self._rand_pos is not None:
                    pose = pose.compose(
                        RigidPose(self._rand_pos[e, ci], self._rand_rot[e, ci]))
                pos[e, ci] = pose.translation
                rot[e, ci] = pose.rotation
        return pos, rot

    # -- cached geometry -------------------------------------------------
    def flat_geometry(self) -> FlatGeometry:
        if self._flat is None:
            self._flat = flatten_geometry(
                [body.bvh for body in self.bodies], self.terrain_bvh)
        return self._flat

    def ray_grids(self) -> tuple[np.ndarray, np.ndarray]:
        """Ray directions (RN,C,H,W,3) and scales (RN,C,H,W); RN is 1 when
        all environments share intrinsics, else num_envs."""
        if self._rand_fov is None:
            if self._base_rays is None:
                grids = [cam.ray_grid() for cam in self.cameras]
                dirs = np.stack([g[0] for g in grids])
                scale = np.stack([g[1] for g in grids])
                self._base_rays = (
                    np.ascontiguousarray(dirs[None]),
                    np.ascontiguousarray(scale[None]),
                )
            return self._base_rays
        if self._rand_rays is None or self._rand_rays[0] != self._rand_generation:
            n, c = self.num_envs, self.num_cameras
            dirs = np.empty((n, c, self.height, self.width, 3))
            scale = np.empty((n, c, self.height, self.width))
            for ci, cam in enumerate(self.cameras):
                for e in range(n):
                    d, s = cam.with_fov_delta(float(self._rand_fov[e, ci])).ray_grid()
                    dirs[e, ci] = d
                    scale[e, ci] = s
            self._rand_rays = (self._rand_generation,
                               np.ascontiguousarray(dirs),
                               np.ascontiguousarray(scale))
        return self._rand_rays[1], self._rand_rays[2]


def render(scene: Scene, *, early_termination: bool = True, backend: str | None = None,
           threads: int | None = None, timestamp: float = 0.0) -> DepthFrame:
    """Cast one ray per (env, camera, pixel) and return range depth.

    Misses read exactly the camera's d_max. Body BVHs are queried in
    their local frames (never rebuilt); terrain afterwards in the world
    frame, bounded by the best body hit when early_termination is on.
    """
    _, render_fn = kernels.get_render_fn(backend)
    threads = kernels.resolve_threads(threads)
    cam_pos, cam_rot = scene.camera_world_poses()
    ray_dirs, ray_scale = scene.ray_grids()
    out = np.empty(scene.frame_shape, dtype=np.float32)
    render_fn(scene.flat_geometry(), scene.body_positions, scene.body_rotations,
              cam_pos, cam_rot, ray_dirs, ray_scale, scene.d_max_per_camera,
              bool(early_termination), out, threads)
    return DepthFrame(out, timestamp)


def render_naive_baseline(scene: Scene, *, early_termination: bool = True,
                          backend: str | None = None, threads: int | None = None,
                          timestamp: float = 0.0) -> DepthFrame:
    """Refit path: per environment, transform every body mesh to world
    coordinates, rebuild its BVH, and query everything in the world
    frame. Output matches render() to float32 precision; cost does not."""
    _, render_fn = kernels.get_render_fn(backend)
    threads = kernels.resolve_threads(threads)
    cam_pos, cam_rot = scene.camera_world_poses()
    ray_dirs, ray_scale = scene.ray_grids()
    out = np.empty(scene.frame_shape, dtype=np.float32)
    nb = scene.num_bodies
    id_pos = np.zeros((1, nb, 3))
    id_rot = np.tile(quat_identity(), (1, nb, 1))
    shared_rays = ray_dirs.shape[0] == 1
    for e in range(scene.num_envs):
        world_bvhs = [
            build_bvh(body.mesh.transformed(scene.body_pose(e, b)))
            for b, body in enumerate(scene.bodies)
        ]
        flat_e = flatten_geometry(world_bvhs, scene.terrain_bvh)
        er = 0 if shared_rays else e
        render_fn(flat_e, id_pos, id_rot,
                  cam_pos[e:e + 1], cam_rot[e:e + 1],
                  ray_dirs[er:er + 1], ray_scale[er:er + 1],
                  scene.d_max_per_camera, bool(early_termination),
                  out[e:e + 1], threads)
    return DepthFrame(out, timestamp)


def depth_to_z(frame: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """Convert range depth to optical-axis z-depth: z = range / |K^-1 p|.

    `scale` is the per-pixel ray scale grid from Scene.ray_grids() or
    CameraModel.ray_grid(), broadcast against the frame.
    """
    return np.asarray(frame) / np.asarray(scale)
