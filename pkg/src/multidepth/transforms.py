"""Rigid-body math: unit quaternions, SE(3) poses, and rays.

Quaternions are stored as (w, x, y, z) numpy arrays and kept unit-norm;
every constructor and composition renormalizes so downstream code can
assume |q| = 1 to within 1e-9.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-9


def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (4,):
        raise ValueError(f"quaternion must have shape (4,), got {q.shape}")
    n = float(np.linalg.norm(q))
    if not np.isfinite(n) or n < 1e-12:
        raise ValueError("cannot normalize a zero or non-finite quaternion")
    return q / n


def quat_mul(a, b) -> np.ndarray:
    """Hamilton product a*b, renormalized."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    q = np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )
    return quat_normalize(q)


def quat_conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, v) -> np.ndarray:
    """Rotate a 3-vector by a unit quaternion."""
    qv = np.asarray(q, dtype=np.float64)[1:]
    w = float(q[0])
    v = np.asarray(v, dtype=np.float64)
    t = 2.0 * np.cross(qv, v)
    return v + w * t + np.cross(qv, t)


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=np.float64)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = float(np.linalg.norm(axis))
    if n < 1e-12:
        raise ValueError("rotation axis must be non-zero")
    half = 0.5 * float(angle)
    q = np.empty(4)
    q[0] = math.cos(half)
    q[1:] = (axis / n) * math.sin(half)
    return quat_normalize(q)


def quat_from_euler(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Quaternion for R = Rz(yaw) @ Ry(pitch) @ Rx(roll), angles in radians."""
    qx = quat_from_axis_angle([1.0, 0.0, 0.0], roll)
    qy = quat_from_axis_angle([0.0, 1.0, 0.0], pitch)
    qz = quat_from_axis_angle([0.0, 0.0, 1.0], yaw)
    return quat_mul(qz, quat_mul(qy, qx))


def quat_from_matrix(m) -> np.ndarray:
    """Unit quaternion for a 3x3 rotation matrix (Shepperd's method)."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError(f"rotation matrix must have shape (3, 3), got {m.shape}")
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    if trace > 0.0:
        s = math.sqrt(trace + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s,
                      (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array([(m[2, 1] - m[1, 2]) / s,
                      0.25 * s,
                      (m[0, 1] + m[1, 0]) / s,
                      (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array([(m[0, 2] - m[2, 0]) / s,
                      (m[0, 1] + m[1, 0]) / s,
                      0.25 * s,
                      (m[1, 2] + m[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array([(m[1, 0] - m[0, 1]) / s,
                      (m[0, 2] + m[2, 0]) / s,
                      (m[1, 2] + m[2, 1]) / s,
                      0.25 * s])
    return quat_normalize(q)


def quat_yaw(q) -> float:
    """Heading of the rotated x-axis, in radians."""
    fwd = quat_rotate(q, np.array([1.0, 0.0, 0.0]))
    return math.atan2(fwd[1], fwd[0])


@dataclass(frozen=True)
class RigidPose:
    """Rigid transform: rotate by `rotation`, then translate by `translation`."""

    translation: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=np.float64)
        if t.shape != (3,):
            raise ValueError(f"translation must have shape (3,), got {t.shape}")
        if not np.all(np.isfinite(t)):
            raise ValueError("translation must be finite")
        object.__setattr__(self, "translation", t.copy())
        object.__setattr__(self, "rotation", quat_normalize(self.rotation))

    @staticmethod
    def identity() -> "RigidPose":
        return RigidPose(np.zeros(3), quat_identity())

    def compose(self, other: "RigidPose") -> "RigidPose":
        """self applied after other is placed in self's frame: (self*other)(p) = self(other(p))."""
        return RigidPose(
            self.translation + quat_rotate(self.rotation, other.translation),
            quat_mul(self.rotation, other.rotation),
        )

    def inverse(self) -> "RigidPose":
        qinv = quat_conjugate(self.rotation)
        return RigidPose(-quat_rotate(qinv, self.translation), qinv)

    def apply(self, point) -> np.ndarray:
        return self.translation + quat_rotate(self.rotation, point)

    def apply_batch(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation_matrix().T + self.translation

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)


@dataclass(frozen=True)
class Ray:
    """Ray with an unnormalized direction.

    `scale` converts the ray parameter t to Euclidean meters: for the camera
    convention used here scale == |direction| at construction, so a hit at
    parameter t lies scale*t meters from the origin.
    """

    origin: np.ndarray
    direction: np.ndarray
    scale: float

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=np.float64)
        d = np.asarray(self.direction, dtype=np.float64)
        if o.shape != (3,) or d.shape != (3,):
            raise ValueError("ray origin and direction must have shape (3,)")
        if not (np.all(np.isfinite(o)) and np.all(np.isfinite(d))):
            raise ValueError("ray origin and direction must be finite")
        if not np.any(d):
            raise ValueError("ray direction must be nonzero")
        if not (self.scale > 0.0):
            raise ValueError("ray scale must be positive")
        object.__setattr__(self, "origin", o.copy())
        object.__setattr__(self, "direction", d.copy())


def world_to_body_ray(ray: Ray, pose: RigidPose) -> Ray:
    """Express a world-frame ray in the local frame of a body at `pose`.

    o_local = R^T (o - t), d_local = R^T d. The scale is unchanged because
    rotation preserves |d|.
    """
    qinv = quat_conjugate(pose.rotation)
    return Ray(
        quat_rotate(qinv, ray.origin - pose.translation),
        quat_rotate(qinv, ray.direction),
        ray.scale,
    )


def body_to_world_ray(ray: Ray, pose: RigidPose) -> Ray:
    return Ray(
        pose.apply(ray.origin),
        quat_rotate(pose.rotation, ray.direction),
        ray.scale,
    )
