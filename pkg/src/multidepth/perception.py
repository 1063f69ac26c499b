"""Perception-side processing: DFSV, side masking, and height maps.

DFSV (directional feature scaling by velocity) damps depth features
from cameras that do not face the commanded travel direction: each
camera's feature block is scaled by a sigmoid of the commanded linear
velocity projected onto that camera's forward axis.

RSM (random side masking) occludes vertical bands at both image edges
with random depth values so a policy cannot over-commit to peripheral
pixels that a helmet rim or hand may block on hardware.

The privileged height map is a root-relative, heading-aligned grid of
terrain heights used by the teacher; it never feeds the deployed
student.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .terrain import HeightField
from .transforms import quat_rotate, quat_yaw

RSM_MODES = ("none", "small", "large")

DEFAULT_RSM_PROBS = {
    "flat": (0.2, 0.4, 0.4),
    "slope_pyramid": (0.2, 0.4, 0.4),
    "stairs_up": (0.2, 0.4, 0.4),
    "stairs_down": (0.2, 0.4, 0.4),
    "stepping_stones": (0.6, 0.3, 0.1),
}


# ---------------------------------------------------------------------------
# DFSV
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DfsvConfig:
    gain: float = 10.0
    threshold: float = 0.1

    def __post_init__(self):
        if self.gain <= 0:
            raise ValueError("gain must be positive")


@dataclass(frozen=True)
class VelocityCommand:
    vx: float = 0.0
    vy: float = 0.0
    yaw_rate: float = 0.0

    @property
    def linear(self) -> np.ndarray:
        return np.array([self.vx, self.vy], dtype=np.float64)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def dfsv_scales(config: DfsvConfig, v_lin, forwards) -> np.ndarray:
    """Per-camera feature scale in (0, 1).

    ``v_lin`` is the commanded linear velocity, shape (..., D);
    ``forwards`` holds each camera's forward direction, shape (C, D)
    (normalized here for safety). D is 2 for planar commands. Returns
    shape (..., C).
    """
    v = np.asarray(v_lin, dtype=np.float64)
    f = np.asarray(forwards, dtype=np.float64)
    if f.ndim == 1:
        f = f[None, :]
    norms = np.linalg.norm(f, axis=-1, keepdims=True)
    if np.any(norms < 1e-12):
        raise ValueError("camera forward directions must be nonzero")
    f = f / norms
    speed_along = np.einsum("...d,cd->...c", v, f)
    return _sigmoid(config.gain * (speed_along - config.threshold))


def dfsv_fuse(features: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """Scale per-camera feature blocks: features (..., C, F) * scales (..., C)."""
    features = np.asarray(features, dtype=np.float64)
    scales = np.asarray(scales, dtype=np.float64)
    if features.shape[:-1] != scales.shape:
        raise ValueError(
            f"features {features.shape} do not align with scales {scales.shape}")
    return features * scales[..., None]


def camera_forward_xy(rotations) -> np.ndarray:
    """Horizontal forward direction of cameras from world rotations.

    The optical axis is +z in the camera frame; its world image is
    projected to the ground plane and normalized. Input (..., 4),
    output (..., 2).
    """
    q = np.asarray(rotations, dtype=np.float64)
    flat = q.reshape(-1, 4)
    out = np.empty((flat.shape[0], 2))
    for i, quat in enumerate(flat):
        fwd = quat_rotate(quat, np.array([0.0, 0.0, 1.0]))
        n = float(np.hypot(fwd[0], fwd[1]))
        if n < 1e-12:
            raise ValueError("camera forward is vertical; horizontal heading undefined")
        out[i] = fwd[:2] / n
    return out.reshape(q.shape[:-1] + (2,))


# ---------------------------------------------------------------------------
# RSM
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RsmConfig:
    f_small: float = 0.125
    f_large: float = 0.25
    probs: dict[str, tuple[float, float, float]] = field(
        default_factory=lambda: dict(DEFAULT_RSM_PROBS))
    fill_low: float = 0.3
    fill_high: float | None = None   # None -> camera far limit
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.f_small <= 0.5 and 0.0 <= self.f_large <= 0.5):
            raise ValueError("mask fractions must be in [0, 0.5]")
        for kind, p in self.probs.items():
            arr = np.asarray(p, dtype=np.float64)
            if arr.shape != (3,) or np.any(arr < 0) or not np.isclose(arr.sum(), 1.0):
                raise ValueError(
                    f"probs[{kind!r}] must be 3 nonnegative values summing to 1")

    def probs_for(self, kind: str) -> tuple[float, float, float]:
        try:
            return self.probs[kind]
        except KeyError:
            raise KeyError(f"no side-mask probabilities for terrain kind {kind!r}")


def rsm_sample_modes(config: RsmConfig, kind: str, num_envs: int,
                     num_cameras: int, *, episode: int = 0) -> np.ndarray:
    """Mask mode index per (env, cam): 0 none, 1 small, 2 large."""
    probs = np.asarray(config.probs_for(kind), dtype=np.float64)
    key = rng.stream_key(config.seed, "rsm-mode")
    env = np.arange(num_envs).reshape(-1, 1)
    cam = np.arange(num_cameras).reshape(1, -1)
    return rng.categorical(key, probs, episode, env, cam)


def rsm_mask_columns(config: RsmConfig, mode: int, width: int) -> int:
    """Columns masked on each side for a mode index."""
    if mode == 0:
        return 0
    fraction = config.f_small if mode == 1 else config.f_large
    return int(fraction * width)


def rsm_apply(depth: np.ndarray, modes: np.ndarray, config: RsmConfig, *,
              d_max: float | np.ndarray, step: int = 0) -> np.ndarray:
    """Overwrite side bands of (N, C, H, W) depth with random fill.

    ``modes`` has shape (N, C). Fill values are uniform on
    [fill_low, fill_high] with fill_high defaulting to d_max, drawn per
    pixel from a counter-based stream so the result is order-independent.
    Pixels outside the bands are returned bit-identical.
    """
    depth = np.asarray(depth)
    if depth.ndim != 4:
        raise ValueError(f"expected (N, C, H, W) depth, got shape {depth.shape}")
    n, c, h, w = depth.shape
    modes = np.asarray(modes)
    if modes.shape != (n, c):
        raise ValueError(f"modes shape {modes.shape} does not match (N, C)=({n}, {c})")
    high = np.broadcast_to(
        np.asarray(d_max if config.fill_high is None else config.fill_high,
                   dtype=np.float64), (c,))

    key = rng.stream_key(config.seed, "rsm-fill")
    out = depth.copy()
    for e in range(n):
        for cam in range(c):
            k = rsm_mask_columns(config, int(modes[e, cam]), w)
            if k == 0:
                continue
            cols = np.concatenate([np.arange(k), np.arange(w - k, w)])
            fill = rng.uniform(key, step, e, cam,
                               np.arange(h).reshape(-1, 1), cols.reshape(1, -1),
                               low=config.fill_low, high=high[cam]).astype(out.dtype)
            out[e, cam, :, :k] = fill[:, :k]
            out[e, cam, :, w - k:] = fill[:, k:]
    return out


# ---------------------------------------------------------------------------
# Privileged height map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeightMapConfig:
    num_forward: int = 16
    num_lateral: int = 10
    cell: float = 0.1
    forward_range: tuple[float, float] = (-0.6, 1.0)
    lateral_range: tuple[float, float] = (-0.5, 0.5)

    def __post_init__(self):
        if self.num_forward < 1 or self.num_lateral < 1 or self.cell <= 0:
            raise ValueError("grid dimensions must be positive")
        fspan = self.forward_range[1] - self.forward_range[0]
        lspan = self.lateral_range[1] - self.lateral_range[0]
        if not (np.isclose(fspan, self.num_forward * self.cell)
                and np.isclose(lspan, self.num_lateral * self.cell)):
            raise ValueError("ranges must equal cell * count along both axes")

    def local_points(self) -> np.ndarray:
        """Sample points (cell centers) in the root frame, shape (F, L, 2)."""
        xs = self.forward_range[0] + (np.arange(self.num_forward) + 0.5) * self.cell
        ys = self.lateral_range[0] + (np.arange(self.num_lateral) + 0.5) * self.cell
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.stack([gx, gy], axis=-1)


@dataclass(frozen=True)
class HeightMapObs:
    values: np.ndarray    # (..., F, L) heights relative to the root
    validity: np.ndarray  # (..., F, L) support flags


def extract_height_map(hf: HeightField, root_pos, root_rot,
                       config: HeightMapConfig = HeightMapConfig()) -> HeightMapObs:
    """Heading-aligned terrain heights around one root pose.

    The grid is placed around the root's ground-plane position, rotated
    by the root's yaw only (full 3-D orientation does not tilt the
    grid), and heights are reported relative to the root height.
    """
    root_pos = np.asarray(root_pos, dtype=np.float64)
    yaw = quat_yaw(np.asarray(root_rot, dtype=np.float64))
    pts = config.local_points()
    cy, sy = np.cos(yaw), np.sin(yaw)
    wx = root_pos[0] + cy * pts[..., 0] - sy * pts[..., 1]
    wy = root_pos[1] + sy * pts[..., 0] + cy * pts[..., 1]
    heights, valid = hf.sample_batch(wx.ravel(), wy.ravel())
    rel = heights.reshape(pts.shape[:-1]) - root_pos[2]
    return HeightMapObs(values=rel, validity=valid.reshape(pts.shape[:-1]))


def extract_height_maps(hf: HeightField, root_pos, root_rot,
                        config: HeightMapConfig = HeightMapConfig()) -> HeightMapObs:
    """Batched over environments: root_pos (N, 3), root_rot (N, 4)."""
    root_pos = np.asarray(root_pos, dtype=np.float64)
    root_rot = np.asarray(root_rot, dtype=np.float64)
    if root_pos.ndim != 2 or root_rot.shape != root_pos.shape[:1] + (4,):
        raise ValueError("expected root_pos (N, 3) and root_rot (N, 4)")
    obs = [extract_height_map(hf, p, q, config)
           for p, q in zip(root_pos, root_rot)]
    return HeightMapObs(values=np.stack([o.values for o in obs]),
                        validity=np.stack([o.validity for o in obs]))
