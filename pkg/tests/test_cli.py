"""End-to-end tests of the command-line harness (run as subprocesses)."""

from __future__ import annotations

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from multidepth import read_frames, read_grid, read_pgm
from multidepth.bench import read_bench_csv

SCENE_CFG = """
[run]
envs = 2
steps = 2
seed = 7

[terrain]
kind = flat
size = 8.0 8.0

[body.crate]
mesh = box 0.6 0.6 0.6
position = 0.8 0.0 0.3

[camera.front]
width = 32
height = 24
hfov_deg = 87.0
vfov_deg = 58.0
d_max = 6.0
position = -1.5 0.0 1.0
look_at = 0.8 0.0 0.3

[camera.down]
width = 32
height = 24
hfov_deg = 60.0
vfov_deg = 60.0
d_max = 4.0
position = 0.0 1.5 2.0
euler_deg = 0.0 90.0 0.0
"""

TERRAIN_CFG = """
[terrain]
kind = stairs_up
step_length = 0.27
step_height = 0.12
num_steps = 6
size = 6.0 4.0
"""

REWARD_CFG = """
[terrain]
kind = flat
size = 4.0 4.0

[foot]
position = 0.2 0.1 0.0
in_contact = true

[torso]
g_proj = 0.0 0.0 -1.0
g_ref = 0.0 0.0 -1.0
sigma = 1.0
"""


def run_cli(*argv, env=None, cwd=None):
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "multidepth", *argv],
        capture_output=True,
        text=True,
        env=full_env,
        cwd=cwd,
    )


@pytest.fixture()
def scene_cfg(tmp_path):
    p = tmp_path / "scene.cfg"
    p.write_text(SCENE_CFG)
    return p


# ---------------------------------------------------------------------------
# render
# ---------------------------------------------------------------------------


def test_render_writes_frames_and_is_reproducible(scene_cfg, tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    for out in (out_a, out_b):
        res = run_cli("render", "--scene", str(scene_cfg), "--out", str(out))
        assert res.returncode == 0, res.stderr
        assert "step 0:" in res.stdout
        assert "step 1:" in res.stdout
    for step in range(2):
        fa = (out_a / f"frame_{step:04d}.mdpt").read_bytes()
        fb = (out_b / f"frame_{step:04d}.mdpt").read_bytes()
        assert fa == fb, "identical invocations must be byte-identical"
    frames = read_frames(out_a / "frame_0000.mdpt")
    assert frames.shape == (2, 2, 24, 32)
    # Frame 1 differs from frame 0 (step-keyed sensor noise).
    assert (out_a / "frame_0000.mdpt").read_bytes() != (
        out_a / "frame_0001.mdpt"
    ).read_bytes()


def test_render_no_noise_differs_only_in_noise(scene_cfg, tmp_path):
    noisy_dir = tmp_path / "noisy"
    clean_dir = tmp_path / "clean"
    res = run_cli("render", "--scene", str(scene_cfg), "--out", str(noisy_dir))
    assert res.returncode == 0, res.stderr
    res = run_cli(
        "render", "--scene", str(scene_cfg), "--out", str(clean_dir), "--no-noise"
    )
    assert res.returncode == 0, res.stderr
    noisy = read_frames(noisy_dir / "frame_0000.mdpt")
    clean = read_frames(clean_dir / "frame_0000.mdpt")
    assert noisy.shape == clean.shape
    assert not np.array_equal(noisy, clean)
    # The clean render repeats across steps (no per-step noise, static scene).
    clean1 = read_frames(clean_dir / "frame_0001.mdpt")
    assert np.array_equal(clean, clean1)
    # Noisy pixels stay within each camera's range.
    assert noisy[:, 0].max() <= 6.0 and noisy[:, 1].max() <= 4.0
    assert noisy.min() > 0.0


def test_render_previews(scene_cfg, tmp_path):
    out = tmp_path / "out"
    res = run_cli(
        "render",
        "--scene", str(scene_cfg),
        "--out", str(out),
        "--steps", "1",
        "--previews",
    )
    assert res.returncode == 0, res.stderr
    for cam in range(2):
        img = read_pgm(out / f"preview_0000_cam{cam}.pgm")
        assert img.dtype == np.uint8
    assert read_pgm(out / "preview_0000_cam0.pgm").shape == (24, 32)
    assert read_pgm(out / "preview_0000_cam1.pgm").shape == (24, 32)


def test_render_backend_flag_agrees(scene_cfg, tmp_path):
    out_nb = tmp_path / "nb"
    out_np = tmp_path / "np"
    for out, backend in ((out_nb, "numba"), (out_np, "numpy")):
        res = run_cli(
            "render",
            "--scene", str(scene_cfg),
            "--out", str(out),
            "--backend", backend,
            "--steps", "1",
        )
        assert res.returncode == 0, res.stderr
    a = read_frames(out_nb / "frame_0000.mdpt")
    b = read_frames(out_np / "frame_0000.mdpt")
    assert np.array_equal(a, b), "backends must agree bit-for-bit"


def test_render_missing_config_exit_2(tmp_path):
    missing = tmp_path / "missing.cfg"
    res = run_cli("render", "--scene", str(missing), "--out", str(tmp_path / "o"))
    assert res.returncode == 2
    assert "missing.cfg" in res.stderr


def test_render_bad_value_exit_2(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text(SCENE_CFG.replace("kind = flat", "kind = volcano"))
    res = run_cli("render", "--scene", str(p), "--out", str(tmp_path / "o"))
    assert res.returncode == 2
    assert "volcano" in res.stderr


def test_render_env_var_threads(scene_cfg, tmp_path):
    out1 = tmp_path / "t1"
    out4 = tmp_path / "t4"
    for out, threads in ((out1, "1"), (out4, "4")):
        res = run_cli(
            "render",
            "--scene", str(scene_cfg),
            "--out", str(out),
            "--steps", "1",
            env={"MULTIDEPTH_THREADS": threads},
        )
        assert res.returncode == 0, res.stderr
    assert (out1 / "frame_0000.mdpt").read_bytes() == (
        out4 / "frame_0000.mdpt"
    ).read_bytes(), "thread count must not change output bits"


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def test_bench_writes_csv(tmp_path):
    out = tmp_path / "bench.csv"
    res = run_cli(
        "bench",
        "--envs", "2", "--cams", "1", "--width", "16", "--height", "12",
        "--bodies", "2", "--repeats", "2", "--out", str(out),
    )
    assert res.returncode == 0, res.stderr
    rows = read_bench_csv(out)
    impls = [r["impl"] for r in rows]
    assert "render" in impls and "render_naive_baseline" in impls
    naive = next(r for r in rows if r["impl"] == "render_naive_baseline")
    assert float(naive["max_abs_diff"]) < 1e-5
    assert float(naive["speedup_vs_naive"]) > 0.0


# ---------------------------------------------------------------------------
# terrain
# ---------------------------------------------------------------------------


def test_terrain_outputs(tmp_path):
    cfg = tmp_path / "ter.cfg"
    cfg.write_text(TERRAIN_CFG)
    out = tmp_path / "ter"
    res = run_cli("terrain", "--config", str(cfg), "--out", str(out))
    assert res.returncode == 0, res.stderr
    assert "kind=stairs_up" in res.stdout
    heights = read_grid(out / "heights.mdpt")
    validity = read_grid(out / "validity.mdpt")
    edge = read_grid(out / "edge_mask.mdpt")
    assert heights.shape == validity.shape == edge.shape
    assert set(np.unique(validity)) <= {0.0, 1.0}
    assert set(np.unique(edge)) <= {0.0, 1.0}
    # Stair heights are non-negative multiples of the step height.
    ratio = heights / np.float32(0.12)
    assert np.allclose(ratio, np.round(ratio), atol=1e-4)
    obj_text = (out / "terrain.obj").read_text()
    assert obj_text.startswith("v ") or "\nv " in obj_text
    assert "\nf " in obj_text


def test_terrain_missing_section_exit_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[run]\nenvs = 1\n")
    res = run_cli("terrain", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert res.returncode == 2


# ---------------------------------------------------------------------------
# mask
# ---------------------------------------------------------------------------


def test_mask_roundtrip(tmp_path):
    from multidepth import write_frames

    frames = np.full((2, 2, 27, 48), 2.0, dtype=np.float32)
    src = tmp_path / "in.mdpt"
    write_frames(src, frames)
    out = tmp_path / "masked"
    res = run_cli(
        "mask",
        "--frames", str(src),
        "--kind", "stairs_up",
        "--out", str(out),
        "--seed", "1",
        "--d-max", "6.0",
    )
    assert res.returncode == 0, res.stderr
    assert "modes" in res.stdout
    masked = read_frames(out / "masked.mdpt")
    assert masked.shape == frames.shape
    assert masked.max() <= 6.0
    for cam in range(2):
        img = read_pgm(out / f"masked_cam{cam}.pgm")
        assert img.shape == (27, 48)
    # Deterministic for the same seed/episode/step.
    out2 = tmp_path / "masked2"
    res = run_cli(
        "mask",
        "--frames", str(src),
        "--kind", "stairs_up",
        "--out", str(out2),
        "--seed", "1",
        "--d-max", "6.0",
    )
    assert res.returncode == 0
    assert (out / "masked.mdpt").read_bytes() == (out2 / "masked.mdpt").read_bytes()


def test_mask_unknown_kind_exit_2(tmp_path):
    from multidepth import write_frames

    src = tmp_path / "in.mdpt"
    write_frames(src, np.zeros((1, 1, 4, 4), dtype=np.float32))
    res = run_cli(
        "mask", "--frames", str(src), "--kind", "lava", "--out", str(tmp_path / "o")
    )
    assert res.returncode == 2
    assert "lava" in res.stderr


def test_mask_missing_frames_exit_3(tmp_path):
    res = run_cli(
        "mask",
        "--frames", str(tmp_path / "nope.mdpt"),
        "--kind", "flat",
        "--out", str(tmp_path / "o"),
    )
    assert res.returncode == 3


# ---------------------------------------------------------------------------
# reward
# ---------------------------------------------------------------------------


def test_reward_report(tmp_path):
    cfg = tmp_path / "rew.cfg"
    cfg.write_text(REWARD_CFG)
    res = run_cli("reward", "--config", str(cfg))
    assert res.returncode == 0, res.stderr
    lines = dict(
        line.split(" = ", 1) for line in res.stdout.splitlines() if " = " in line
    )
    assert lines["terrain_kind"] == "flat"
    assert lines["foot_edge_penalty"] == "0.0"
    assert float(lines["foothold_coverage"]) == 1.0
    assert float(lines["foothold_penalty"]) == 0.0
    assert float(lines["torso_orientation_reward"]) == 1.0


def test_reward_tilted_torso(tmp_path):
    # 60-degree tilt: ||g - g_ref||^2 = 1, sigma = 1 -> e^-1.
    s, c = math.sin(math.pi / 3), math.cos(math.pi / 3)
    cfg_text = REWARD_CFG.replace(
        "g_proj = 0.0 0.0 -1.0", f"g_proj = {s:.17g} 0.0 {-c:.17g}"
    )
    cfg = tmp_path / "rew.cfg"
    cfg.write_text(cfg_text)
    res = run_cli("reward", "--config", str(cfg))
    assert res.returncode == 0, res.stderr
    line = next(
        l for l in res.stdout.splitlines() if l.startswith("torso_orientation_reward")
    )
    value = float(line.split(" = ")[1])
    assert value == pytest.approx(math.exp(-1.0), abs=1e-9)


def test_reward_non_unit_gravity_exit_2(tmp_path):
    cfg = tmp_path / "rew.cfg"
    cfg.write_text(REWARD_CFG.replace("g_proj = 0.0 0.0 -1.0", "g_proj = 0.0 0.0 -0.5"))
    res = run_cli("reward", "--config", str(cfg))
    assert res.returncode == 2
    assert "unit-norm" in res.stderr


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------


def test_console_script_installed(scene_cfg, tmp_path):
    import shutil

    exe = shutil.which("multidepth")
    if exe is None:
        pytest.skip("console script not on PATH")
    res = subprocess.run(
        [exe, "render", "--scene", str(scene_cfg), "--out",
         str(tmp_path / "o"), "--steps", "1"],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr


def test_no_subcommand_usage_error():
    res = run_cli()
    assert res.returncode == 2
    assert "usage" in res.stderr.lower()
