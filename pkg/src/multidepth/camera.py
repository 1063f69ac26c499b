"""Pinhole camera model and ray construction.

Camera frame convention: +z forward (optical axis), +x right, +y down,
so image row y grows downward. A pixel (x, y) is sampled at its center
(x + 0.5, y + 0.5); the camera-frame ray through it is K^-1 [x+0.5,
y+0.5, 1]^T with |direction| stored as the ray scale, which converts hit
parameters to Euclidean meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .transforms import Ray, RigidPose, quat_from_matrix, quat_rotate


@dataclass(frozen=True)
class CameraModel:
    """Intrinsics + mount.

    fx = (W/2)/tan(hfov/2) and fy = (H/2)/tan(vfov/2): the field of view
    spans the full sensor width/height. Principal point at the image
    center (cx = W/2, cy = H/2 in continuous pixel coordinates).

    `parent_body` is the index of the scene body the camera is mounted
    on (the mount pose is relative to that body); None means the mount
    pose is already a world pose.
    """

    width: int
    height: int
    hfov_deg: float
    vfov_deg: float
    d_max: float = 10.0
    mount: RigidPose = field(default_factory=RigidPose.identity)
    parent_body: int | None = None
    name: str = ""

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1 pixel")
        for label, fov in (("hfov_deg", self.hfov_deg), ("vfov_deg", self.vfov_deg)):
            if not (0.0 < fov < 180.0):
                raise ValueError(f"{label}={fov} must be in (0, 180) degrees")
        if not (self.d_max > 0.0):
            raise ValueError("d_max must be positive")

    @property
    def fx(self) -> float:
        return (self.width / 2.0) / math.tan(math.radians(self.hfov_deg) / 2.0)

    @property
    def fy(self) -> float:
        return (self.height / 2.0) / math.tan(math.radians(self.vfov_deg) / 2.0)

    @property
    def cx(self) -> float:
        return self.width / 2.0

    @property
    def cy(self) -> float:
        return self.height / 2.0

    def k_matrix(self) -> np.ndarray:
        return np.array([
            [self.fx, 0.0, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ])

    def k_inv(self) -> np.ndarray:
        return np.array([
            [1.0 / self.fx, 0.0, -self.cx / self.fx],
            [0.0, 1.0 / self.fy, -self.cy / self.fy],
            [0.0, 0.0, 1.0],
        ])

    def ray_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Camera-frame directions (H, W, 3) and scales |dir| (H, W)."""
        u = (np.arange(self.width) + 0.5 - self.cx) / self.fx
        v = (np.arange(self.height) + 0.5 - self.cy) / self.fy
        dirs = np.empty((self.height, self.width, 3))
        dirs[:, :, 0] = u[None, :]
        dirs[:, :, 1] = v[:, None]
        dirs[:, :, 2] = 1.0
        scale = np.sqrt(dirs[:, :, 0] ** 2 + dirs[:, :, 1] ** 2 + 1.0)
        return dirs, scale

    def with_fov_delta(self, delta_deg: float) -> "CameraModel":
        """Both FOVs shifted by the same offset; fx/fy follow."""
        return replace(self, hfov_deg=self.hfov_deg + delta_deg,
                       vfov_deg=self.vfov_deg + delta_deg)

    def with_mount(self, mount: RigidPose) -> "CameraModel":
        return replace(self, mount=mount)


def build_depth_ray(cam_pose: RigidPose, k_inv: np.ndarray, x: int, y: int) -> Ray:
    """World-frame ray through pixel (x, y) sampled at its center."""
    r_c = np.asarray(k_inv, dtype=np.float64) @ np.array([x + 0.5, y + 0.5, 1.0])
    direction = quat_rotate(cam_pose.rotation, r_c)
    return Ray(cam_pose.translation, direction, float(np.linalg.norm(r_c)))


def look_at_pose(position, target, up=(0.0, 0.0, 1.0)) -> RigidPose:
    """Pose whose camera frame (+z forward, +y down) looks from position
    at target, with the image's up direction as close to `up` as the
    forward direction permits."""
    position = np.asarray(position, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - position
    n = np.linalg.norm(forward)
    if n < 1e-12:
        raise ValueError("camera position and target coincide")
    forward = forward / n
    up = np.asarray(up, dtype=np.float64)
    right = np.cross(forward, up)
    rn = np.linalg.norm(right)
    if rn < 1e-9:
        # forward parallel to up: pick any perpendicular right axis
        alt = np.array([1.0, 0.0, 0.0])
        if abs(forward[0]) > 0.9:
            alt = np.array([0.0, 1.0, 0.0])
        right = np.cross(forward, alt)
        rn = np.linalg.norm(right)
    right = right / rn
    down = np.cross(forward, right)
    rot = np.column_stack([right, down, forward])
    return RigidPose(position, quat_from_matrix(rot))
