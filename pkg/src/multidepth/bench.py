"""Benchmark harness comparing the optimized renderer to the naive one.

The workload is a ring of world-fixed cameras watching a box of
floating icosphere bodies over flat ground. Bodies get fresh random
poses every repeat (all implementations see identical poses), one
warm-up repeat is discarded, and rows report mean/std wall-clock, a
cross-implementation max-abs-diff correctness column, and the speedup
against the naive rebuild-per-pose baseline.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass

import numpy as np

from . import rng
from .camera import CameraModel, look_at_pose
from .kernels import resolve_backend
from .mesh import make_icosphere, make_plane
from .scene import Scene, render, render_naive_baseline

CSV_COLUMNS = ("impl", "backend", "envs", "cams", "resolution",
               "mean_ms", "std_ms", "max_abs_diff", "speedup_vs_naive")

_POS_LOW = np.array([-1.2, -1.2, 0.3])
_POS_HIGH = np.array([1.2, 1.2, 1.8])


@dataclass(frozen=True)
class BenchRow:
    impl: str
    backend: str
    envs: int
    cams: int
    resolution: str
    mean_ms: float
    std_ms: float
    max_abs_diff: float
    speedup_vs_naive: float | None


def build_bench_scene(envs: int, cams: int, width: int, height: int,
                      bodies: int) -> Scene:
    """Floating spheres over flat ground, cameras on a ring facing in."""
    if min(envs, cams, width, height, bodies) < 1:
        raise ValueError("all benchmark dimensions must be >= 1")
    body_meshes = [(f"sphere{i}", make_icosphere(radius=0.25, subdivisions=2))
                   for i in range(bodies)]
    cameras = []
    for c in range(cams):
        angle = 2.0 * math.pi * c / cams
        position = np.array([3.0 * math.cos(angle), 3.0 * math.sin(angle), 1.5])
        cameras.append(CameraModel(
            width=width, height=height, hfov_deg=87.0, vfov_deg=58.0,
            d_max=10.0, mount=look_at_pose(position, np.zeros(3)),
            name=f"cam{c}"))
    terrain = make_plane(size=(12.0, 12.0))
    return Scene(num_envs=envs, bodies=body_meshes, cameras=cameras,
                 terrain=terrain)


def pose_trajectory(num_envs: int, num_bodies: int, seed: int,
                    step: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic random poses, shape ((N, B, 3), (N, B, 4))."""
    key = rng.stream_key(seed, "motion")
    env = np.arange(num_envs).reshape(-1, 1, 1)
    body = np.arange(num_bodies).reshape(1, -1, 1)
    axis3 = np.arange(3).reshape(1, 1, -1)

    u = rng.uniform(key, 0, step, env, body, axis3)
    positions = _POS_LOW + u * (_POS_HIGH - _POS_LOW)

    axes = rng.normal(key, 1, step, env, body, axis3)
    norms = np.linalg.norm(axes, axis=-1, keepdims=True)
    np.maximum(norms, 1e-12, out=norms)
    axes = axes / norms
    angles = rng.uniform(key, 2, step, env[..., 0], body[..., 0],
                         high=math.pi)
    half = angles / 2.0
    rotations = np.concatenate(
        [np.cos(half)[..., None], axes * np.sin(half)[..., None]], axis=-1)
    return positions, rotations


def run_bench(*, envs: int, cams: int, width: int, height: int, bodies: int,
              repeats: int = 5, seed: int = 0, backend: str | None = None,
              compare_backends: bool = False, include_naive: bool = True,
              threads: int | None = None) -> list[BenchRow]:
    """Time the implementations over ``repeats`` warm repeats.

    One extra warm-up repeat runs first and is discarded. All
    implementations render the same pose sequence; correctness is the
    max abs diff against the optimized renderer on the first timed
    repeat's output.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    primary = resolve_backend(backend)
    scene = build_bench_scene(envs, cams, width, height, bodies)

    impls: list[tuple[str, str]] = [("render", primary)]
    if include_naive:
        impls.append(("render_naive_baseline", primary))
    if compare_backends:
        other = "numpy" if primary == "numba" else "numba"
        impls.append(("render", other))

    def call(impl: str, impl_backend: str) -> np.ndarray:
        fn = render if impl == "render" else render_naive_baseline
        frame = fn(scene, backend=impl_backend, threads=threads)
        return frame.data

    times_ms: dict[tuple[str, str], list[float]] = {key: [] for key in impls}
    first_out: dict[tuple[str, str], np.ndarray] = {}
    for repeat in range(repeats + 1):
        positions, rotations = pose_trajectory(envs, bodies, seed, repeat)
        scene.set_body_poses(positions, rotations)
        for impl_key in impls:
            t0 = time.perf_counter()
            out = call(*impl_key)
            elapsed_ms = (time.perf_counter() - t0) * 1e3
            if repeat == 0:
                first_out[impl_key] = out   # warm-up: keep output, drop time
            else:
                times_ms[impl_key].append(elapsed_ms)

    reference = first_out[("render", primary)]
    naive_key = ("render_naive_baseline", primary)
    naive_mean = (float(np.mean(times_ms[naive_key]))
                  if include_naive else None)

    rows = []
    for impl_key in impls:
        impl, impl_backend = impl_key
        samples = np.asarray(times_ms[impl_key])
        if impl_key == ("render", primary) and include_naive:
            diff_against = first_out[naive_key]
        else:
            diff_against = reference
        max_abs_diff = float(np.max(np.abs(
            first_out[impl_key].astype(np.float64)
            - diff_against.astype(np.float64))))
        mean_ms = float(samples.mean())
        speedup = naive_mean / mean_ms if naive_mean is not None else None
        rows.append(BenchRow(
            impl=impl, backend=impl_backend, envs=envs, cams=cams,
            resolution=f"{width}x{height}",
            mean_ms=mean_ms, std_ms=float(samples.std()),
            max_abs_diff=max_abs_diff, speedup_vs_naive=speedup))
    return rows


def write_bench_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([
                row.impl, row.backend, row.envs, row.cams, row.resolution,
                f"{row.mean_ms:.3f}", f"{row.std_ms:.3f}",
                f"{row.max_abs_diff:.3e}",
                "" if row.speedup_vs_naive is None
                else f"{row.speedup_vs_naive:.3f}",
            ])


def read_bench_csv(path) -> list[dict[str, str]]:
    with open(path, "r", newline="") as fh:
        return list(csv.DictReader(fh))
