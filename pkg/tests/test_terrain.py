"""Tests for procedural terrain generation, height fields, and edge masks."""

from __future__ import annotations

import math

import numpy as np
import pytest

from multidepth import (
    EdgeMask,
    HeightField,
    TerrainSpec,
    TriMesh,
    build_bvh,
    compute_edge_mask,
    foothold_validity,
    generate_terrain,
    query_bvh,
)
from multidepth.terrain import (
    DEFAULT_DILATION_RADIUS,
    DEFAULT_GRADIENT_THRESHOLD,
    MAX_HEIGHT_VARIATION,
    MAX_INCLINE_DEG,
    STEP_HEIGHT_RANGE,
    STEP_LENGTH_RANGE,
    STONE_GAP_RANGE,
    STONE_SIZE_RANGE,
    TERRAIN_KINDS,
)

import oracles


def mesh_height_at(mesh: TriMesh, x: float, y: float) -> float:
    """Probe the mesh surface height by casting a downward ray."""
    bvh = build_bvh(mesh)
    origin = np.array([x, y, 100.0])
    direction = np.array([0.0, 0.0, -1.0])
    t, face = query_bvh(bvh, origin, direction)
    assert face >= 0, f"downward ray at ({x}, {y}) missed the mesh"
    return 100.0 - t


# ---------------------------------------------------------------------------
# TerrainSpec validation
# ---------------------------------------------------------------------------


def test_terrain_kinds_tuple():
    assert TERRAIN_KINDS == (
        "flat",
        "slope_pyramid",
        "stairs_up",
        "stairs_down",
        "stepping_stones",
    )


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match="kind"):
        TerrainSpec(kind="lava")


def test_incline_range_enforced():
    TerrainSpec(kind="slope_pyramid", incline_deg=MAX_INCLINE_DEG)  # boundary OK
    with pytest.raises(ValueError, match="outside supported range"):
        TerrainSpec(kind="slope_pyramid", incline_deg=MAX_INCLINE_DEG + 0.1)
    with pytest.raises(ValueError, match="outside supported range"):
        TerrainSpec(kind="slope_pyramid", incline_deg=-MAX_INCLINE_DEG - 0.1)


def test_step_ranges_enforced():
    lo, hi = STEP_LENGTH_RANGE
    TerrainSpec(kind="stairs_up", step_length=lo)
    TerrainSpec(kind="stairs_up", step_length=hi)
    with pytest.raises(ValueError, match="outside supported range"):
        TerrainSpec(kind="stairs_up", step_length=hi + 0.01)
    lo, hi = STEP_HEIGHT_RANGE
    with pytest.raises(ValueError, match="outside supported range"):
        TerrainSpec(kind="stairs_down", step_height=lo - 0.01)


def test_stone_ranges_enforced():
    lo, hi = STONE_SIZE_RANGE
    TerrainSpec(kind="stepping_stones", stone_size=lo)
    with pytest.raises(ValueError, match="outside supported range"):
        TerrainSpec(kind="stepping_stones", stone_size=hi + 0.01)
    lo, hi = STONE_GAP_RANGE
    with pytest.raises(ValueError, match="outside supported range"):
        TerrainSpec(kind="stepping_stones", stone_gap=hi + 0.01)
    with pytest.raises(ValueError, match="outside supported range"):
        TerrainSpec(
            kind="stepping_stones", height_variation=MAX_HEIGHT_VARIATION + 0.001
        )


def test_unchecked_bypasses_ranges():
    spec = TerrainSpec(kind="slope_pyramid", incline_deg=55.0, unchecked=True)
    assert spec.incline_deg == 55.0
    spec = TerrainSpec(kind="stairs_up", step_height=0.5, unchecked=True)
    mesh, hf = generate_terrain(spec)
    assert np.max(hf.heights) > 0.4


def test_floor_depth_must_exceed_variation():
    with pytest.raises(ValueError, match="floor_depth"):
        TerrainSpec(
            kind="stepping_stones", height_variation=0.05, floor_depth=0.04
        )


def test_positive_dimensions_required():
    with pytest.raises(ValueError):
        TerrainSpec(kind="flat", size=(0.0, 6.0))
    with pytest.raises(ValueError):
        TerrainSpec(kind="flat", cell_size=0.0)


# ---------------------------------------------------------------------------
# Flat terrain
# ---------------------------------------------------------------------------


def test_flat_mesh_and_heightfield():
    spec = TerrainSpec(kind="flat", size=(4.0, 3.0))
    mesh, hf = generate_terrain(spec)
    # Exact two-triangle plane at z = 0.
    assert mesh.num_faces == 2
    assert np.allclose(mesh.vertices[:, 2], 0.0)
    assert np.allclose(hf.heights, 0.0)
    assert np.all(hf.validity)
    # Height-field geometry: whole cells covering the snapped extent.
    assert hf.cell_size == spec.cell_size
    assert hf.nx == int(math.floor(4.0 / spec.cell_size)) + 1
    assert hf.ny == int(math.floor(3.0 / spec.cell_size)) + 1


def test_flat_edge_mask_all_false():
    _, hf = generate_terrain(TerrainSpec(kind="flat"))
    em = compute_edge_mask(hf)
    assert isinstance(em, EdgeMask)
    assert not em.mask.any()
    assert em.dilation_radius_cells == DEFAULT_DILATION_RADIUS
    assert em.gradient_threshold == DEFAULT_GRADIENT_THRESHOLD


# ---------------------------------------------------------------------------
# Stairs
# ---------------------------------------------------------------------------


def test_stairs_up_heights_match_analytic():
    spec = TerrainSpec(
        kind="stairs_up",
        step_length=0.28,
        step_height=0.15,
        num_steps=6,
        platform_length=1.0,
        width=3.0,
    )
    mesh, hf = generate_terrain(spec)
    xs, ys = hf.node_coords()
    for x in np.linspace(-0.9, 6 * 0.28 + 0.9, 25):
        expected = oracles.stairs_height(x, 0.28, 0.15, 6)
        h, valid = hf.sample(x, 0.0)
        assert valid
        assert h == pytest.approx(expected, abs=1e-9), f"x={x}"


def test_stairs_down_mirrors_up():
    up = TerrainSpec(kind="stairs_up", step_length=0.27, step_height=0.12, num_steps=5)
    down = TerrainSpec(
        kind="stairs_down", step_length=0.27, step_height=0.12, num_steps=5
    )
    _, hf_up = generate_terrain(up)
    _, hf_down = generate_terrain(down)
    assert np.allclose(hf_down.heights, -hf_up.heights)


def test_stairs_heights_are_exact_multiples():
    spec = TerrainSpec(kind="stairs_up", step_length=0.3, step_height=0.2, num_steps=4)
    _, hf = generate_terrain(spec)
    ratio = hf.heights / 0.2
    assert np.allclose(ratio, np.round(ratio), atol=1e-12)
    assert hf.heights.min() == 0.0
    assert hf.heights.max() == pytest.approx(4 * 0.2, abs=1e-12)


def test_stairs_mesh_agrees_with_heightfield():
    spec = TerrainSpec(kind="stairs_up", step_length=0.26, step_height=0.18, num_steps=5)
    mesh, hf = generate_terrain(spec)
    rng = np.random.default_rng(3)
    xs, ys = hf.node_coords()
    # Probe strictly inside cells (away from the risers at cell boundaries).
    for _ in range(20):
        ix = rng.integers(0, hf.nx - 1)
        iy = rng.integers(0, hf.ny - 1)
        x = (xs[ix] + xs[ix + 1]) / 2
        y = (ys[iy] + ys[iy + 1]) / 2
        h_mesh = mesh_height_at(mesh, x, y)
        h_field, valid = hf.sample(x, y)
        assert valid
        assert h_mesh == pytest.approx(h_field, abs=1e-6)


# ---------------------------------------------------------------------------
# Slope pyramid
# ---------------------------------------------------------------------------


def test_slope_pyramid_analytic_profile():
    spec = TerrainSpec(
        kind="slope_pyramid", incline_deg=25.0, platform_size=1.0, size=(6.0, 6.0)
    )
    mesh, hf = generate_terrain(spec)
    slope = math.tan(math.radians(25.0))
    xs, ys = hf.node_coords()
    half_extent = min(xs[-1] - xs[0], ys[-1] - ys[0]) / 2
    for x, y in [(0.0, 0.0), (0.3, 0.1), (1.2, 0.0), (0.0, -2.0), (2.0, 2.0)]:
        cheb = max(abs(x), abs(y))
        expected = slope * np.clip(half_extent - max(cheb, 0.5), 0.0, None)
        h, valid = hf.sample(x, y)
        assert valid
        assert h == pytest.approx(expected, abs=1e-9), f"({x},{y})"


def test_slope_pyramid_rotationally_symmetric():
    _, hf = generate_terrain(TerrainSpec(kind="slope_pyramid", incline_deg=30.0))
    h = hf.heights
    assert np.allclose(h, h[::-1, :], atol=1e-12)
    assert np.allclose(h, h[:, ::-1], atol=1e-12)
    # Peak is a flat platform at the center.
    cy, cx = h.shape[0] // 2, h.shape[1] // 2
    assert h[cy, cx] == h.max()


def test_negative_incline_digs_a_pit():
    _, hf = generate_terrain(TerrainSpec(kind="slope_pyramid", incline_deg=-20.0))
    assert hf.heights.min() < -0.3
    assert hf.heights.max() == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# Stepping stones
# ---------------------------------------------------------------------------


def test_stepping_stones_lattice_and_tops():
    spec = TerrainSpec(
        kind="stepping_stones",
        stone_size=0.30,
        stone_gap=0.30,
        height_variation=0.04,
        seed=11,
        size=(6.0, 6.0),
    )
    mesh, hf = generate_terrain(spec)
    pitch = 0.30 + 0.30
    # Stone centers form a lattice; probe the center stone and one neighbor.
    for (i, j) in [(0, 0), (1, 0), (0, 1), (-1, -1), (2, -2)]:
        x, y = i * pitch, j * pitch
        h, valid = hf.sample(x, y)
        assert valid, f"stone ({i},{j}) center should be valid"
        assert abs(h) <= 0.04 + 1e-9
        h_mesh = mesh_height_at(mesh, x, y)
        assert h_mesh == pytest.approx(h, abs=1e-6)
    # Gap cells are invalid and the floor sits at -floor_depth.
    gx = pitch / 2
    h, valid = hf.sample(gx, 0.0)
    assert not valid
    h_mesh = mesh_height_at(mesh, gx, 0.0)
    assert h_mesh == pytest.approx(-spec.floor_depth, abs=1e-6)


def test_stepping_stones_deterministic_and_seeded():
    spec_a = TerrainSpec(kind="stepping_stones", seed=5)
    spec_b = TerrainSpec(kind="stepping_stones", seed=5)
    spec_c = TerrainSpec(kind="stepping_stones", seed=6)
    _, hf_a = generate_terrain(spec_a)
    _, hf_b = generate_terrain(spec_b)
    _, hf_c = generate_terrain(spec_c)
    assert np.array_equal(hf_a.heights, hf_b.heights)
    assert np.array_equal(hf_a.validity, hf_b.validity)
    assert not np.array_equal(
        hf_a.heights[hf_a.validity], hf_c.heights[hf_c.validity]
    )


def test_circular_stones_round_in_plan():
    spec = TerrainSpec(
        kind="stepping_stones",
        stone_size=0.40,
        stone_gap=0.40,
        circular_stones=True,
        height_variation=0.0,
        seed=2,
    )
    mesh, hf = generate_terrain(spec)
    r = 0.40 / 2
    # The center stone: inside the radius is stone-top, outside (but inside the
    # bounding square's corner) is floor.
    h_in = mesh_height_at(mesh, r * 0.6, r * 0.6)
    assert h_in == pytest.approx(0.0, abs=1e-6)
    h_corner = mesh_height_at(mesh, r * 0.8, r * 0.8)  # |.8r,.8r| > r
    assert h_corner == pytest.approx(-spec.floor_depth, abs=1e-6)


def test_zero_height_variation_gives_level_tops():
    spec = TerrainSpec(kind="stepping_stones", height_variation=0.0, seed=9)
    _, hf = generate_terrain(spec)
    assert np.allclose(hf.heights[hf.validity], 0.0, atol=1e-12)


# ---------------------------------------------------------------------------
# HeightField API
# ---------------------------------------------------------------------------


def test_heightfield_sampling_and_oob():
    hf = HeightField(
        origin=np.zeros(3),
        cell_size=0.5,
        heights=np.arange(12, dtype=np.float64).reshape(3, 4),
        validity=np.ones((3, 4), dtype=bool),
    )
    h, valid = hf.sample(0.0, 0.0)
    assert valid and h == 0.0
    h, valid = hf.sample(1.5, 1.0)  # node (ix=3, iy=2) -> row-major 2*4+3
    assert valid and h == 11.0
    # Nearest-node rounding.
    h, valid = hf.sample(0.74, 0.0)
    assert h == 1.0
    # Out of bounds -> floor height, invalid.
    h, valid = hf.sample(10.0, 0.0)
    assert not valid and h == hf.floor_height


def test_heightfield_sample_batch_matches_scalar():
    _, hf = generate_terrain(TerrainSpec(kind="stepping_stones", seed=4))
    rng = np.random.default_rng(0)
    xs = rng.uniform(-4.0, 4.0, size=40)
    ys = rng.uniform(-4.0, 4.0, size=40)
    hs, vs = hf.sample_batch(xs, ys)
    for k in range(40):
        h, v = hf.sample(xs[k], ys[k])
        assert hs[k] == h
        assert vs[k] == v


def test_cell_index_roundtrip():
    _, hf = generate_terrain(TerrainSpec(kind="flat", size=(2.0, 2.0)))
    xs, ys = hf.node_coords()
    assert hf.cell_index(xs[0], ys[0]) == (0, 0)
    assert hf.cell_index(xs[-1], ys[-1]) == (hf.ny - 1, hf.nx - 1)
    assert hf.cell_index(xs[-1] + 1.0, 0.0) is None


def test_foothold_validity_helper():
    _, hf = generate_terrain(TerrainSpec(kind="stepping_stones", seed=1))
    idx_stone = hf.cell_index(0.0, 0.0)
    assert foothold_validity(hf, idx_stone)
    pitch = 0.25 + 0.60
    idx_gap = hf.cell_index(pitch / 2, 0.0)
    assert not foothold_validity(hf, idx_gap)


# ---------------------------------------------------------------------------
# Edge masks
# ---------------------------------------------------------------------------


def test_edge_mask_matches_reference_on_random_fields():
    rng = np.random.default_rng(42)
    for trial in range(10):
        ny, nx = rng.integers(6, 20, size=2)
        heights = rng.uniform(0.0, 0.5, size=(ny, nx))
        validity = rng.random((ny, nx)) > 0.2
        hf = HeightField(
            origin=np.zeros(3), cell_size=0.05, heights=heights, validity=validity
        )
        radius = int(rng.integers(0, 3))
        em = compute_edge_mask(hf, dilation_radius=radius)
        ref = oracles.edge_mask_reference(
            heights, validity, DEFAULT_GRADIENT_THRESHOLD, radius
        )
        assert np.array_equal(em.mask, ref), f"trial {trial}"


def test_edge_mask_stairs_band():
    # A single riser produces a band of edge cells along the top of the riser,
    # dilated by the requested radius.
    heights = np.zeros((7, 9))
    heights[:, 5:] = 0.2  # riser between columns 4 and 5
    hf = HeightField(
        origin=np.zeros(3),
        cell_size=0.05,
        heights=heights,
        validity=np.ones((7, 9), dtype=bool),
    )
    em0 = compute_edge_mask(hf, dilation_radius=0)
    # Raw edges: exactly the first elevated column (its lower neighbor drops).
    expected = np.zeros((7, 9), dtype=bool)
    expected[:, 5] = True
    assert np.array_equal(em0.mask, expected)
    em1 = compute_edge_mask(hf, dilation_radius=1)
    expected1 = np.zeros((7, 9), dtype=bool)
    expected1[:, 4:7] = True  # 3-wide band after radius-1 square dilation
    assert np.array_equal(em1.mask, expected1)


def test_edge_mask_dilation_monotone():
    _, hf = generate_terrain(TerrainSpec(kind="stairs_up"))
    prev = None
    for radius in range(0, 4):
        em = compute_edge_mask(hf, dilation_radius=radius)
        if prev is not None:
            assert np.all(em.mask | ~prev), "smaller-radius mask must be a subset"
            assert em.mask.sum() >= prev.sum()
        prev = em.mask


def test_edge_mask_stone_interiors_clear():
    # With stones larger than the dilation reach, stone centers stay unmasked.
    spec = TerrainSpec(
        kind="stepping_stones",
        stone_size=0.40,
        stone_gap=0.40,
        height_variation=0.0,
        cell_size=0.05,
        seed=3,
    )
    _, hf = generate_terrain(spec)
    em = compute_edge_mask(hf, dilation_radius=1)
    idx = hf.cell_index(0.0, 0.0)
    assert hf.validity[idx]
    assert not em.mask[idx]
    # Invalid cells are never raw edges (dilation may still reach them).
    em0 = compute_edge_mask(hf, dilation_radius=0)
    assert not em0.mask[~hf.validity].any()


def test_edge_mask_invalid_neighbors_mark_edges():
    heights = np.zeros((5, 5))
    validity = np.ones((5, 5), dtype=bool)
    validity[2, 2] = False
    hf = HeightField(
        origin=np.zeros(3), cell_size=0.05, heights=heights, validity=validity
    )
    em = compute_edge_mask(hf, dilation_radius=0)
    expected = np.zeros((5, 5), dtype=bool)
    expected[1, 2] = expected[3, 2] = expected[2, 1] = expected[2, 3] = True
    assert np.array_equal(em.mask, expected)


# ---------------------------------------------------------------------------
# Mesh/height-field consistency across kinds
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["flat", "slope_pyramid", "stairs_up", "stairs_down"])
def test_mesh_matches_heightfield_inside_cells(kind):
    spec = TerrainSpec(kind=kind, size=(4.0, 4.0))
    mesh, hf = generate_terrain(spec)
    xs, ys = hf.node_coords()
    rng = np.random.default_rng(7)
    for _ in range(12):
        ix = int(rng.integers(0, hf.nx - 1))
        iy = int(rng.integers(0, hf.ny - 1))
        # Strictly inside a cell: the surface is the bilinear patch's two
        # triangles; probing at the cell center matches either node plane only
        # for piecewise-flat kinds, so compare against the mesh directly for
        # all four nodes instead.
        for (jx, jy) in [(ix, iy), (ix + 1, iy), (ix, iy + 1), (ix + 1, iy + 1)]:
            x, y = xs[jx], ys[jy]
            # Nudge probes inward so rays don't run along shared edges.
            x = float(np.clip(x, xs[0] + 1e-4, xs[-1] - 1e-4))
            y = float(np.clip(y, ys[0] + 1e-4, ys[-1] - 1e-4))
            h_mesh = mesh_height_at(mesh, x, y)
            h_node, valid = hf.sample(x, y)
            assert valid
            # Nodes are shared mesh vertices; nudged probes sit on adjacent
            # triangles, so allow the local slope to move the surface.
            slope_allow = 2e-4 * max(
                1.0, abs(np.gradient(hf.heights, axis=0)).max() / hf.cell_size,
                abs(np.gradient(hf.heights, axis=1)).max() / hf.cell_size,
            )
            assert abs(h_mesh - h_node) <= slope_allow + 1e-6


def test_extent_snapping_to_whole_cells():
    spec = TerrainSpec(kind="flat", size=(1.07, 1.07), cell_size=0.1)
    _, hf = generate_terrain(spec)
    # 1.07 / 0.1 -> 10 whole cells -> 11 nodes spanning exactly 1.0.
    assert hf.nx == 11 and hf.ny == 11
    xs, ys = hf.node_coords()
    assert xs[-1] - xs[0] == pytest.approx(1.0, abs=1e-12)
