"""Depth-sensor realism: noise, dropout, latency, and downsampling.

Raw rendered depth is degraded to match a real stereo depth module:
multiplicative Gaussian noise proportional to range, pixel dropout to a
fill value, a latency buffer serving stale frames, and block-minimum
downsampling from the native resolution to the policy resolution.
Camera extrinsics and field of view can be perturbed per environment to
decorrelate the mounting from the nominal model.

All stochastic paths draw from the counter-based generator in
:mod:`multidepth.rng`, keyed by (seed, stream, step, env, cam, pixel),
so results are independent of evaluation order and thread count.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .camera import CameraModel
from .scene import DepthFrame, Scene
from .transforms import RigidPose, quat_from_euler

NATIVE_RESOLUTION = (240, 135)   # (width, height)
POLICY_RESOLUTION = (48, 27)
DOWNSAMPLE_FACTOR = 5

DEFAULT_NOISE_SCALE = 0.1
DEFAULT_DROPOUT_P = 0.05
DEFAULT_MAX_DELAY = 0.100

DEPTH_FLOOR = 1e-6


@dataclass(frozen=True)
class SensorConfig:
    noise_scale: float = DEFAULT_NOISE_SCALE
    dropout_p: float = DEFAULT_DROPOUT_P
    max_delay: float = DEFAULT_MAX_DELAY
    dropout_fill: float | None = None   # None -> camera far limit
    seed: int = 0

    def __post_init__(self):
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        if not (0.0 <= self.dropout_p < 1.0):
            raise ValueError("dropout_p must be in [0, 1)")
        if self.max_delay < 0:
            raise ValueError("max_delay must be >= 0")


def apply_noise_dropout(depth: np.ndarray, config: SensorConfig, *,
                        d_max: float | np.ndarray, step: int = 0) -> np.ndarray:
    """Degrade a depth block of shape (N, C, H, W).

    Each pixel independently either drops out (probability ``dropout_p``,
    replaced by the fill value) or is scaled by ``1 + noise_scale * g``
    with g standard normal, then clamped to [DEPTH_FLOOR, d_max]. d_max
    may be scalar or per-camera of shape (C,).
    """
    depth = np.asarray(depth)
    if depth.ndim != 4:
        raise ValueError(f"expected (N, C, H, W) depth, got shape {depth.shape}")
    n, c, h, w = depth.shape
    d_max_arr = np.broadcast_to(np.asarray(d_max, dtype=np.float64), (c,))
    fill = d_max_arr if config.dropout_fill is None else np.full(c, config.dropout_fill)

    key = rng.stream_key(config.seed, "sensor")
    env = np.arange(n).reshape(n, 1, 1, 1)
    cam = np.arange(c).reshape(1, c, 1, 1)
    row = np.arange(h).reshape(1, 1, h, 1)
    col = np.arange(w).reshape(1, 1, 1, w)

    drop = rng.uniform(key, 0, step, env, cam, row, col) < config.dropout_p
    gauss = rng.normal(key, 1, step, env, cam, row, col)
    noisy = depth.astype(np.float64) * (1.0 + config.noise_scale * gauss)
    out = np.where(drop, fill.reshape(1, c, 1, 1), noisy)
    np.clip(out, DEPTH_FLOOR, d_max_arr.reshape(1, c, 1, 1), out=out)
    return out.astype(np.float32)


def downsample_min(depth: np.ndarray, factor: int = DOWNSAMPLE_FACTOR) -> np.ndarray:
    """Block-minimum pooling over the trailing (H, W) axes.

    The minimum (rather than mean) preserves thin nearby obstacles.
    H and W must be divisible by the factor.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    depth = np.asarray(depth)
    h, w = depth.shape[-2:]
    if h % factor or w % factor:
        raise ValueError(
            f"resolution {w}x{h} not divisible by downsample factor {factor}")
    lead = depth.shape[:-2]
    blocked = depth.reshape(*lead, h // factor, factor, w // factor, factor)
    return blocked.min(axis=(-3, -1))


class FrameBuffer:
    """Latency buffer keyed by timestamp.

    Frames are pushed with strictly increasing timestamps; fetching at
    time ``now`` with a given delay returns the most recent frame whose
    timestamp is at most ``now - delay``, or the oldest retained frame
    when none qualifies yet.
    """

    def __init__(self, capacity: int = 16):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._times: list[float] = []
        self._frames: list[DepthFrame] = []

    def __len__(self) -> int:
        return len(self._frames)

    def push(self, frame: DepthFrame) -> None:
        if self._times and frame.timestamp <= self._times[-1]:
            raise ValueError(
                f"timestamps must be strictly increasing; got {frame.timestamp} "
                f"after {self._times[-1]}")
        self._times.append(frame.timestamp)
        self._frames.append(frame)
        if len(self._frames) > self.capacity:
            self._times.pop(0)
            self._frames.pop(0)

    def fetch_delayed(self, now: float, delay: float) -> DepthFrame:
        if not self._frames:
            raise LookupError("frame buffer is empty")
        if delay < 0:
            raise ValueError("delay must be >= 0")
        idx = bisect.bisect_right(self._times, now - delay) - 1
        return self._frames[max(idx, 0)]

    def fetch_delayed_batch(self, now: float, delays: np.ndarray) -> np.ndarray:
        """Per-environment delays: stacks row e of each selected frame."""
        delays = np.asarray(delays, dtype=np.float64)
        if delays.ndim != 1:
            raise ValueError("delays must be 1-D over environments")
        rows = []
        for e, delay in enumerate(delays):
            frame = self.fetch_delayed(now, float(delay))
            rows.append(frame.data[e])
        return np.stack(rows, axis=0)


def sample_latencies(config: SensorConfig, num_envs: int, *,
                     episode: int = 0) -> np.ndarray:
    """Per-environment sensing delay, uniform on [0, max_delay]."""
    key = rng.stream_key(config.seed, "latency")
    env = np.arange(num_envs)
    return rng.uniform(key, episode, env, low=0.0, high=config.max_delay)


@dataclass(frozen=True)
class CameraRandomization:
    """Bounds for per-environment camera perturbations.

    Translation is uniform per axis; rotation is uniform Euler angles
    (roll, pitch, yaw) composed into the mount; the field-of-view delta
    is applied to both axes.
    """
    translation: float = 0.025
    rot_roll_deg: float = 2.5
    rot_pitch_deg: float = 3.0
    rot_yaw_deg: float = 2.5
    fov_deg: float = 2.0
    seed: int = 0

    def __post_init__(self):
        for name in ("translation", "rot_roll_deg", "rot_pitch_deg",
                     "rot_yaw_deg", "fov_deg"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def sample_camera_offsets(config: CameraRandomization, num_envs: int,
                          num_cameras: int, *, episode: int = 0):
    """Draw (offset_pos, offset_rot, fov_delta) for a scene.

    Shapes: (N, C, 3), (N, C, 4), (N, C). Deterministic in
    (seed, episode, env, cam).
    """
    key = rng.stream_key(config.seed, "camera")
    env = np.arange(num_envs).reshape(-1, 1)
    cam = np.arange(num_cameras).reshape(1, -1)

    pos = np.stack(
        [rng.uniform(key, 0, axis, episode, env, cam,
                     low=-config.translation, high=config.translation)
         for axis in range(3)], axis=-1)

    bounds = (config.rot_roll_deg, config.rot_pitch_deg, config.rot_yaw_deg)
    euler = np.stack(
        [np.radians(rng.uniform(key, 1, axis, episode, env, cam,
                                low=-b, high=b))
         for axis, b in enumerate(bounds)], axis=-1)
    rot = np.empty((num_envs, num_cameras, 4))
    for e in range(num_envs):
        for c in range(num_cameras):
            rot[e, c] = quat_from_euler(*euler[e, c])

    fov = rng.uniform(key, 2, 0, episode, env, cam,
                      low=-config.fov_deg, high=config.fov_deg)
    return pos, rot, fov


def randomize_scene_cameras(scene: Scene, config: CameraRandomization, *,
                            episode: int = 0) -> None:
    """Sample offsets and install them on the scene."""
    pos, rot, fov = sample_camera_offsets(
        config, scene.num_envs, scene.num_cameras, episode=episode)
    scene.set_camera_randomization(pos, rot, fov)


def randomized_camera(camera: CameraModel, offset_pos, offset_rot,
                      fov_delta: float) -> CameraModel:
    """Standalone single-camera version of the scene-level randomization."""
    offset = RigidPose(np.asarray(offset_pos, dtype=np.float64),
                       np.asarray(offset_rot, dtype=np.float64))
    return camera.with_mount(camera.mount.compose(offset)).with_fov_delta(fov_delta)
