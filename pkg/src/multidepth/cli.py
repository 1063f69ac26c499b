"""Command-line harness.

Subcommands: ``render`` (scene config -> per-step raw depth frames),
``bench`` (timing CSV), ``terrain`` (mesh + grids for a terrain spec),
``mask`` (apply side masking to a stored frame), ``reward`` (evaluate
the reward oracles for a configured state).

Exit codes: 0 success, 2 configuration/usage error, 3 I/O failure.
The ``MULTIDEPTH_THREADS`` environment variable caps render workers;
``MULTIDEPTH_BACKEND`` picks the default kernel backend.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import bench as bench_mod
from . import frameio
from .config import (ConfigError, load_config, run_config_from_config,
                     scene_from_config, sensor_config_from_config,
                     rsm_config_from_config, camera_randomization_from_config,
                     terrain_spec_from_config, _get, _as_float, _as_floats,
                     _as_bool, _as_int)
from .mesh import save_obj
from .perception import RsmConfig, rsm_sample_modes, rsm_apply
from .rewards import (FootState, TorsoRewardConfig, foot_edge_penalty,
                      foothold_coverage, torso_orientation_reward)
from .scene import render
from .sensor import apply_noise_dropout, randomize_scene_cameras
from .terrain import (TERRAIN_KINDS, compute_edge_mask, generate_terrain,
                      DEFAULT_GRADIENT_THRESHOLD, DEFAULT_DILATION_RADIUS)
from .transforms import RigidPose, quat_from_euler


def _fail(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)


# ---------------------------------------------------------------------------
# render
# ---------------------------------------------------------------------------

def _cmd_render(args) -> int:
    cfg = load_config(args.scene)
    run = run_config_from_config(cfg)
    envs = args.envs if args.envs is not None else run.envs
    steps = args.steps if args.steps is not None else run.steps
    seed = args.seed if args.seed is not None else run.seed
    backend = args.backend if args.backend is not None else run.backend
    threads = args.threads if args.threads is not None else run.threads
    if envs < 1 or steps < 1:
        raise ConfigError("envs and steps must be >= 1")

    terrain_mesh = None
    if "terrain" in cfg:
        spec = terrain_spec_from_config(cfg)
        terrain_mesh, _ = generate_terrain(spec)
    base_dir = os.path.dirname(os.path.abspath(args.scene))
    scene = scene_from_config(cfg, envs, base_dir=base_dir,
                              terrain_mesh=terrain_mesh)

    rand = camera_randomization_from_config(cfg)
    if rand is not None:
        randomize_scene_cameras(scene, rand, episode=seed)

    sensor_cfg = sensor_config_from_config(cfg)
    if "seed" not in cfg.get("sensor", {}):
        import dataclasses
        sensor_cfg = dataclasses.replace(sensor_cfg, seed=seed)

    _ensure_dir(args.out)
    d_max = scene.d_max_per_camera
    for step in range(steps):
        t0 = time.perf_counter()
        frame = render(scene, backend=backend, threads=threads,
                       timestamp=float(step))
        data = frame.data
        if not args.no_noise:
            data = apply_noise_dropout(data, sensor_cfg, d_max=d_max, step=step)
        elapsed_ms = (time.perf_counter() - t0) * 1e3
        path = os.path.join(args.out, f"frame_{step:04d}.mdpt")
        frameio.write_frames(path, data)
        print(f"step {step}: {elapsed_ms:.2f} ms -> {path}")
        if args.previews:
            for cam in range(scene.num_cameras):
                img = frameio.depth_to_u8(data[0, cam], float(d_max[cam]))
                frameio.write_pgm(
                    os.path.join(args.out,
                                 f"preview_{step:04d}_cam{cam}.pgm"), img)
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def _cmd_bench(args) -> int:
    rows = bench_mod.run_bench(
        envs=args.envs, cams=args.cams, width=args.width, height=args.height,
        bodies=args.bodies, repeats=args.repeats, seed=args.seed,
        backend=args.backend, compare_backends=args.compare_backends,
        include_naive=not args.no_naive, threads=args.threads)
    bench_mod.write_bench_csv(rows, args.out)
    for row in rows:
        speedup = ("" if row.speedup_vs_naive is None
                   else f" speedup={row.speedup_vs_naive:.2f}x")
        print(f"{row.impl}[{row.backend}] {row.envs}x{row.cams}"
              f"@{row.resolution}: {row.mean_ms:.2f} +/- {row.std_ms:.2f} ms"
              f" maxdiff={row.max_abs_diff:.2e}{speedup}")
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# terrain
# ---------------------------------------------------------------------------

def _cmd_terrain(args) -> int:
    cfg = load_config(args.config)
    spec = terrain_spec_from_config(cfg)
    mesh, hf = generate_terrain(spec)

    section = cfg.get("edge_mask", {})
    threshold = _as_float(section.get("gradient_threshold",
                                      DEFAULT_GRADIENT_THRESHOLD),
                          "edge_mask.gradient_threshold")
    radius = _as_int(section.get("dilation_radius", DEFAULT_DILATION_RADIUS),
                     "edge_mask.dilation_radius")
    mask = compute_edge_mask(hf, gradient_threshold=threshold,
                             dilation_radius=radius)

    _ensure_dir(args.out)
    save_obj(os.path.join(args.out, "terrain.obj"), mesh)
    frameio.write_grid(os.path.join(args.out, "heights.mdpt"), hf.heights)
    frameio.write_grid(os.path.join(args.out, "validity.mdpt"),
                       hf.validity.astype(np.float32))
    frameio.write_grid(os.path.join(args.out, "edge_mask.mdpt"),
                       mask.mask.astype(np.float32))
    print(f"kind={spec.kind} grid={hf.ny}x{hf.nx} cell={hf.cell_size}")
    print(f"heights [{hf.heights.min():.3f}, {hf.heights.max():.3f}] m; "
          f"valid {int(hf.validity.sum())}/{hf.validity.size} cells; "
          f"edge cells {int(mask.mask.sum())}")
    print(f"mesh: {mesh.num_vertices} vertices, {mesh.num_faces} triangles "
          f"-> {os.path.join(args.out, 'terrain.obj')}")
    return 0


# ---------------------------------------------------------------------------
# mask
# ---------------------------------------------------------------------------

def _cmd_mask(args) -> int:
    frames = frameio.read_frames(args.frames)
    n, c, _, _ = frames.shape
    if args.config is not None:
        rsm_cfg = rsm_config_from_config(load_config(args.config))
    else:
        rsm_cfg = RsmConfig()
    if args.seed is not None:
        import dataclasses
        rsm_cfg = dataclasses.replace(rsm_cfg, seed=args.seed)
    if args.kind not in TERRAIN_KINDS:
        raise ConfigError(
            f"unknown terrain kind {args.kind!r}; expected one of {TERRAIN_KINDS}")
    modes = rsm_sample_modes(rsm_cfg, args.kind, n, c, episode=args.episode)
    masked = rsm_apply(frames, modes, rsm_cfg, d_max=args.d_max,
                       step=args.step)
    _ensure_dir(args.out)
    out_path = os.path.join(args.out, "masked.mdpt")
    frameio.write_frames(out_path, masked)
    for cam in range(c):
        img = frameio.depth_to_u8(masked[0, cam], args.d_max)
        frameio.write_pgm(os.path.join(args.out, f"masked_cam{cam}.pgm"), img)
    mode_names = np.array(["none", "small", "large"])
    print(f"modes (env, cam):")
    for e in range(min(n, 8)):
        print(f"  env {e}: " + " ".join(mode_names[modes[e]]))
    print(f"wrote {out_path}")
    return 0


# ---------------------------------------------------------------------------
# reward
# ---------------------------------------------------------------------------

def _cmd_reward(args) -> int:
    cfg = load_config(args.config)
    spec = terrain_spec_from_config(cfg)
    _, hf = generate_terrain(spec)

    em_section = cfg.get("edge_mask", {})
    threshold = _as_float(em_section.get("gradient_threshold",
                                         DEFAULT_GRADIENT_THRESHOLD),
                          "edge_mask.gradient_threshold")
    radius = _as_int(em_section.get("dilation_radius",
                                    DEFAULT_DILATION_RADIUS),
                     "edge_mask.dilation_radius")
    mask = compute_edge_mask(hf, gradient_threshold=threshold,
                             dilation_radius=radius)

    foot_kwargs = {}
    if "length" in cfg.get("foot", {}):
        foot_kwargs["length"] = _as_float(cfg["foot"]["length"], "foot.length")
    if "width" in cfg.get("foot", {}):
        foot_kwargs["width"] = _as_float(cfg["foot"]["width"], "foot.width")
    position = _as_floats(_get(cfg, "foot", "position"), 3, "foot.position")
    euler = _as_floats(_get(cfg, "foot", "euler_deg", [0.0, 0.0, 0.0]),
                       3, "foot.euler_deg")
    in_contact = _as_bool(_get(cfg, "foot", "in_contact", True),
                          "foot.in_contact")
    try:
        foot = FootState(
            pose=RigidPose(np.array(position),
                           quat_from_euler(*np.radians(euler))),
            in_contact=in_contact, **foot_kwargs)
    except ValueError as exc:
        raise ConfigError(f"[foot]: {exc}") from exc

    fh_section = cfg.get("foothold", {})
    height_tol = _as_float(fh_section.get("height_tol", 0.03),
                           "foothold.height_tol")
    cov_threshold = fh_section.get("coverage_threshold")
    if cov_threshold is not None:
        cov_threshold = _as_float(cov_threshold, "foothold.coverage_threshold")

    edge = foot_edge_penalty(foot, mask, hf)
    coverage, penalty = foothold_coverage(
        foot, hf, height_tol=height_tol, coverage_threshold=cov_threshold)

    print(f"terrain_kind = {spec.kind}")
    print(f"foot_edge_penalty = {edge:.1f}")
    print(f"foothold_coverage = {coverage:.12g}")
    print(f"foothold_penalty = {penalty:.12g}")

    if "torso" in cfg:
        g_proj = _as_floats(_get(cfg, "torso", "g_proj"), 3, "torso.g_proj")
        g_ref = _as_floats(_get(cfg, "torso", "g_ref"), 3, "torso.g_ref")
        sigma = _as_float(_get(cfg, "torso", "sigma", 1.0), "torso.sigma")
        try:
            reward = torso_orientation_reward(
                g_proj, g_ref, TorsoRewardConfig(sigma=sigma))
        except ValueError as exc:
            raise ConfigError(f"[torso]: {exc}") from exc
        print(f"torso_orientation_reward = {reward:.12g}")
    return 0


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multidepth",
        description="Parallel multi-camera depth rendering toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render per-step depth frames")
    p.add_argument("--scene", required=True, help="scene config file")
    p.add_argument("--envs", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-noise", action="store_true",
                   help="skip sensor noise and dropout")
    p.add_argument("--previews", action="store_true",
                   help="write PGM previews for env 0")
    p.add_argument("--backend", choices=("numba", "numpy"), default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("bench", help="benchmark renderer implementations")
    p.add_argument("--envs", type=int, default=256)
    p.add_argument("--cams", type=int, default=2)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=36)
    p.add_argument("--bodies", type=int, default=8)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--backend", choices=("numba", "numpy"), default=None)
    p.add_argument("--compare-backends", action="store_true",
                   help="add rows for the other backend")
    p.add_argument("--no-naive", action="store_true",
                   help="skip the naive baseline rows")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("terrain", help="emit terrain mesh and grids")
    p.add_argument("--config", required=True, help="config with [terrain]")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_terrain)

    p = sub.add_parser("mask", help="apply random side masking to a frame file")
    p.add_argument("--frames", required=True, help="input .mdpt file")
    p.add_argument("--kind", required=True,
                   help="terrain kind selecting mode probabilities")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", default=None, help="config with [rsm]")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--episode", type=int, default=0)
    p.add_argument("--step", type=int, default=0)
    p.add_argument("--d-max", type=float, default=10.0)
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("reward", help="evaluate reward oracles for a state")
    p.add_argument("--config", required=True,
                   help="config with [terrain] and [foot]/[torso]")
    p.set_defaults(func=_cmd_reward)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _fail(str(exc))
        return 2
    except (ValueError, KeyError) as exc:
        _fail(str(exc))
        return 2
    except OSError as exc:
        _fail(str(exc))
        return 3


if __name__ == "__main__":
    sys.exit(main())
