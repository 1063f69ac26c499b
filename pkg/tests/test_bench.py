"""Tests for the benchmark harness."""

from __future__ import annotations

import numpy as np
import pytest

from multidepth.bench import (
    CSV_COLUMNS,
    build_bench_scene,
    pose_trajectory,
    read_bench_csv,
    run_bench,
    write_bench_csv,
)


def test_bench_scene_shape():
    scene = build_bench_scene(envs=3, cams=2, width=32, height=18, bodies=4)
    assert scene.num_envs == 3
    assert scene.num_cameras == 2
    assert scene.num_bodies == 4
    assert scene.terrain is not None
    for cam in scene.cameras:
        assert (cam.width, cam.height) == (32, 18)
        assert cam.d_max == 10.0


def test_pose_trajectory_deterministic():
    a_pos, a_rot = pose_trajectory(4, 3, seed=1, step=5)
    b_pos, b_rot = pose_trajectory(4, 3, seed=1, step=5)
    c_pos, c_rot = pose_trajectory(4, 3, seed=1, step=6)
    d_pos, _ = pose_trajectory(4, 3, seed=2, step=5)
    assert a_pos.shape == (4, 3, 3)
    assert a_rot.shape == (4, 3, 4)
    assert np.array_equal(a_pos, b_pos) and np.array_equal(a_rot, b_rot)
    assert not np.array_equal(a_pos, c_pos)
    assert not np.array_equal(a_pos, d_pos)
    # Quaternions are unit-norm; positions stay inside the camera ring.
    assert np.allclose(np.linalg.norm(a_rot, axis=-1), 1.0, atol=1e-9)
    assert np.all(np.abs(a_pos[..., :2]) <= 1.2 + 1e-12)
    assert np.all((a_pos[..., 2] >= 0.3) & (a_pos[..., 2] <= 1.8))


def test_run_bench_rows_and_diffs():
    rows = run_bench(
        envs=2, cams=2, width=24, height=16, bodies=2, repeats=2, seed=0
    )
    impls = [r.impl for r in rows]
    assert impls[0] == "render"
    assert "render_naive_baseline" in impls
    by_impl = {r.impl: r for r in rows}
    primary = by_impl["render"]
    naive = by_impl["render_naive_baseline"]
    assert primary.envs == 2 and primary.cams == 2
    assert primary.resolution == "24x16"
    assert primary.mean_ms > 0.0 and primary.std_ms >= 0.0
    # The optimized and naive renderers must agree to float32 exactness.
    assert naive.max_abs_diff is not None
    assert naive.max_abs_diff < 1e-5
    assert primary.speedup_vs_naive == pytest.approx(
        naive.mean_ms / primary.mean_ms, rel=1e-6
    )


def test_run_bench_compare_backends():
    rows = run_bench(
        envs=1, cams=1, width=16, height=12, bodies=1, repeats=2, seed=0,
        compare_backends=True, include_naive=False,
    )
    backends = {r.backend for r in rows}
    assert backends == {"numba", "numpy"}
    for r in rows:
        assert r.impl == "render"
    # The secondary backend's row records its diff against the primary.
    secondary = rows[1]
    assert secondary.max_abs_diff is not None
    assert secondary.max_abs_diff < 1e-5
    # Without the naive baseline there is no speedup denominator.
    assert all(r.speedup_vs_naive is None for r in rows)


def test_csv_roundtrip(tmp_path):
    rows = run_bench(
        envs=1, cams=1, width=16, height=12, bodies=1, repeats=2, seed=3
    )
    path = tmp_path / "bench.csv"
    write_bench_csv(rows, path)
    text = path.read_text()
    header = text.splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    parsed = read_bench_csv(path)
    assert len(parsed) == len(rows)
    assert parsed[0]["impl"] == "render"
    assert parsed[0]["resolution"] == "16x12"
    float(parsed[0]["mean_ms"])  # numeric fields parse
    naive_row = next(r for r in parsed if r["impl"] == "render_naive_baseline")
    assert float(naive_row["speedup_vs_naive"]) > 0.0
