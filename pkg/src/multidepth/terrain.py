"""Procedural terrain: meshes plus analytic height fields.

Five families: flat ground, a pyramid slope rising to a central
platform, ascending/descending straight staircases, and a lattice of
column-shaped stepping stones over a recessed floor. Every family
produces a TriMesh for the renderer and a HeightField sampled from the
same analytic height function on a fine node grid, so the two stay
consistent by construction.

Grid convention: heights[iy, ix] is the height at
(origin.x + ix*cell, origin.y + iy*cell); validity is false where there
is no support (stone gaps), in which case the recorded height is the
fall-through floor height. Queries outside the grid are void.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .mesh import TriMesh, make_box, make_plane, merge_meshes

TERRAIN_KINDS = ("flat", "slope_pyramid", "stairs_up", "stairs_down",
                 "stepping_stones")

# Parameter envelopes enforced unless TerrainSpec.unchecked is set.
MAX_INCLINE_DEG = 37.0
STEP_LENGTH_RANGE = (0.25, 0.30)
STEP_HEIGHT_RANGE = (0.05, 0.27)
STONE_SIZE_RANGE = (0.25, 0.40)
STONE_GAP_RANGE = (0.05, 0.70)
MAX_HEIGHT_VARIATION = 0.05

DEFAULT_GRADIENT_THRESHOLD = 0.04
DEFAULT_DILATION_RADIUS = 1

_EPS = 1e-9


@dataclass(frozen=True)
class TerrainSpec:
    kind: str
    size: tuple[float, float] = (6.0, 6.0)
    seed: int = 0
    cell_size: float = 0.05
    unchecked: bool = False
    # slope_pyramid
    incline_deg: float = 20.0
    platform_size: float = 1.0
    # stairs_up / stairs_down
    step_length: float = 0.27
    step_height: float = 0.12
    num_steps: int = 8
    width: float = 3.0
    platform_length: float = 1.0
    # stepping_stones
    stone_size: float = 0.25
    stone_gap: float = 0.60
    height_variation: float = 0.02
    floor_depth: float = 0.5
    circular_stones: bool = False

    def __post_init__(self):
        if self.kind not in TERRAIN_KINDS:
            raise ValueError(
                f"unknown terrain kind {self.kind!r}; expected one of {TERRAIN_KINDS}")
        object.__setattr__(self, "size",
                           (float(self.size[0]), float(self.size[1])))
        if self.size[0] <= 0 or self.size[1] <= 0:
            raise ValueError(f"size={self.size} must be positive")
        if self.cell_size <= 0:
            raise ValueError(f"cell_size={self.cell_size} must be positive")
        self._validate_kind()

    def _validate_kind(self):
        checked = not self.unchecked
        if self.kind == "slope_pyramid":
            if checked and abs(self.incline_deg) > MAX_INCLINE_DEG:
                raise ValueError(
                    f"incline_deg={self.incline_deg} outside supported range "
                    f"[-{MAX_INCLINE_DEG}, {MAX_INCLINE_DEG}] degrees "
                    f"(set unchecked=True to override)")
            if self.platform_size < 0:
                raise ValueError("platform_size must be >= 0")
            if self.platform_size >= min(self.size):
                raise ValueError(
                    f"platform_size={self.platform_size} must be smaller than "
                    f"the terrain extent {min(self.size)}")
        elif self.kind in ("stairs_up", "stairs_down"):
            if self.num_steps < 1:
                raise ValueError("num_steps must be >= 1")
            if self.width <= 0:
                raise ValueError("width must be positive")
            if self.platform_length < self.cell_size:
                raise ValueError("platform_length must cover at least one cell")
            if checked:
                lo, hi = STEP_LENGTH_RANGE
                if not (lo <= self.step_length <= hi):
                    raise ValueError(
                        f"step_length={self.step_length} outside supported range "
                        f"[{lo}, {hi}] m (set unchecked=True to override)")
                lo, hi = STEP_HEIGHT_RANGE
                if not (lo <= self.step_height <= hi):
                    raise ValueError(
                        f"step_height={self.step_height} outside supported range "
                        f"[{lo}, {hi}] m (set unchecked=True to override)")
            elif self.step_length <= 0 or self.step_height <= 0:
                raise ValueError("step_length and step_height must be positive")
        elif self.kind == "stepping_stones":
            if checked:
                lo, hi = STONE_SIZE_RANGE
                if not (lo <= self.stone_size <= hi):
                    raise ValueError(
                        f"stone_size={self.stone_size} outside supported range "
                        f"[{lo}, {hi}] m (set unchecked=True to override)")
                lo, hi = STONE_GAP_RANGE
                if not (lo <= self.stone_gap <= hi):
                    raise ValueError(
                        f"stone_gap={self.stone_gap} outside supported range "
                        f"[{lo}, {hi}] m (set unchecked=True to override)")
                if not (0 <= self.height_variation <= MAX_HEIGHT_VARIATION):
                    raise ValueError(
                        f"height_variation={self.height_variation} outside supported "
                        f"range [0, {MAX_HEIGHT_VARIATION}] m "
                        f"(set unchecked=True to override)")
            elif self.stone_size <= 0 or self.stone_gap < 0 or self.height_variation < 0:
                raise ValueError("stone_size/stone_gap/height_variation invalid")
            if self.floor_depth <= self.height_variation:
                raise ValueError(
                    "floor_depth must exceed height_variation so stone tops "
                    "stay above the floor")


@dataclass(frozen=True)
class HeightField:
    origin: np.ndarray
    cell_size: float
    heights: np.ndarray
    validity: np.ndarray
    floor_height: float = 0.0

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64)
        heights = np.ascontiguousarray(self.heights, dtype=np.float64)
        validity = np.ascontiguousarray(self.validity, dtype=bool)
        if origin.shape != (3,):
            raise ValueError("origin must be a 3-vector")
        if heights.ndim != 2 or heights.shape != validity.shape:
            raise ValueError("heights and validity must be matching 2-D grids")
        if not np.all(np.isfinite(heights)):
            raise ValueError("heights must be finite")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "validity", validity)

    @property
    def ny(self) -> int:
        return self.heights.shape[0]

    @property
    def nx(self) -> int:
        return self.heights.shape[1]

    def node_coords(self) -> tuple[np.ndarray, np.ndarray]:
        xs = self.origin[0] + np.arange(self.nx) * self.cell_size
        ys = self.origin[1] + np.arange(self.ny) * self.cell_size
        return xs, ys

    def cell_index(self, x: float, y: float) -> tuple[int, int] | None:
        """Nearest node (iy, ix), or None outside the grid."""
        ix = int(round((x - self.origin[0]) / self.cell_size))
        iy = int(round((y - self.origin[1]) / self.cell_size))
        if 0 <= ix < self.nx and 0 <= iy < self.ny:
            return iy, ix
        return None

    def sample(self, x: float, y: float) -> tuple[float, bool]:
        """Nearest-node height and support flag; void outside the grid."""
        cell = self.cell_index(x, y)
        if cell is None:
            return self.floor_height, False
        iy, ix = cell
        return float(self.heights[iy, ix]), bool(self.validity[iy, ix])

    def sample_batch(self, xs, ys) -> tuple[np.ndarray, np.ndarray]:
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        ix = np.rint((xs - self.origin[0]) / self.cell_size).astype(np.int64)
        iy = np.rint((ys - self.origin[1]) / self.cell_size).astype(np.int64)
        inside = (ix >= 0) & (ix < self.nx) & (iy >= 0) & (iy < self.ny)
        ixc = np.clip(ix, 0, self.nx - 1)
        iyc = np.clip(iy, 0, self.ny - 1)
        heights = np.where(inside, self.heights[iyc, ixc], self.floor_height)
        valid = inside & self.validity[iyc, ixc]
        return heights, valid


@dataclass(frozen=True)
class EdgeMask:
    mask: np.ndarray
    dilation_radius_cells: int
    gradient_threshold: float

    def __post_init__(self):
        mask = np.ascontiguousarray(self.mask, dtype=bool)
        if mask.ndim != 2:
            raise ValueError("mask must be 2-D")
        if self.dilation_radius_cells < 0:
            raise ValueError("dilation_radius_cells must be >= 0")
        object.__setattr__(self, "mask", mask)


def _node_axis(extent: float, cell: float, start: float) -> np.ndarray:
    n = int(math.floor(extent / cell + _EPS)) + 1
    return start + np.arange(n) * cell


def _grid_mesh(xs: np.ndarray, ys: np.ndarray, heights: np.ndarray) -> TriMesh:
    ny, nx = heights.shape
    gx, gy = np.meshgrid(xs, ys)
    verts = np.column_stack([gx.ravel(), gy.ravel(), heights.ravel()])
    iy, ix = np.meshgrid(np.arange(ny - 1), np.arange(nx - 1), indexing="ij")
    v00 = (iy * nx + ix).ravel()
    v01 = v00 + 1
    v10 = v00 + nx
    v11 = v10 + 1
    faces = np.empty((2 * len(v00), 3), dtype=np.int64)
    faces[0::2] = np.column_stack([v00, v01, v11])
    faces[1::2] = np.column_stack([v00, v11, v10])
    return TriMesh(verts, faces)


def _cylinder(center_xy, radius: float, z0: float, z1: float,
              segments: int = 24) -> TriMesh:
    cx, cy = center_xy
    ang = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    ring = np.column_stack([cx + radius * np.cos(ang), cy + radius * np.sin(ang)])
    verts = [[cx, cy, z0], [cx, cy, z1]]
    for x, y in ring:
        verts.append([x, y, z0])
    for x, y in ring:
        verts.append([x, y, z1])
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        b0, b1 = 2 + i, 2 + j
        t0, t1 = 2 + segments + i, 2 + segments + j
        faces.append([0, b1, b0])          # bottom fan
        faces.append([1, t0, t1])          # top fan
        faces.append([b0, b1, t1])         # side
        faces.append([b0, t1, t0])
    return TriMesh(np.array(verts), np.array(faces, dtype=np.int64))


def _stone_lattice(spec: TerrainSpec):
    pitch = spec.stone_size + spec.stone_gap
    half = spec.stone_size / 2.0
    imax = int(math.floor((spec.size[0] / 2.0 - half) / pitch + _EPS))
    jmax = int(math.floor((spec.size[1] / 2.0 - half) / pitch + _EPS))
    if imax < 0 or jmax < 0:
        raise ValueError(
            f"size={spec.size} too small to fit a single {spec.stone_size} m stone")
    return pitch, half, imax, jmax


def _stone_top(spec: TerrainSpec, i, j):
    """Per-stone top height; i, j may be scalars or arrays."""
    key = rng.stream_key(spec.seed, "terrain")
    return rng.uniform(key, i, j,
                       low=-spec.height_variation, high=spec.height_variation)


def generate_terrain(spec: TerrainSpec) -> tuple[TriMesh, HeightField]:
    """Mesh + sampled height field for a terrain spec.

    The mesh is watertight over its footprint; stepping-stone gaps fall
    through to a recessed floor plane, recorded in the height field as
    floor height with validity false.
    """
    cell = spec.cell_size
    if spec.kind in ("stairs_up", "stairs_down"):
        x0 = -spec.platform_length
        run = spec.num_steps * spec.step_length
        xs = _node_axis(run + 2 * spec.platform_length, cell, x0)
        ys = _node_axis(spec.width, cell, -spec.width / 2.0)
    else:
        xs = _node_axis(spec.size[0], cell, -spec.size[0] / 2.0)
        ys = _node_axis(spec.size[1], cell, -spec.size[1] / 2.0)
    gx, gy = np.meshgrid(xs, ys)
    floor_height = 0.0

    if spec.kind == "flat":
        heights = np.zeros_like(gx)
        validity = np.ones_like(heights, dtype=bool)
        mesh = make_plane(size=(xs[-1] - xs[0], ys[-1] - ys[0]))

    elif spec.kind == "slope_pyramid":
        slope = math.tan(math.radians(spec.incline_deg))
        radius = min(xs[-1] - xs[0], ys[-1] - ys[0]) / 2.0
        cheb = np.maximum(np.abs(gx), np.abs(gy))
        rise = np.clip(radius - np.maximum(cheb, spec.platform_size / 2.0), 0.0, None)
        heights = slope * rise
        validity = np.ones_like(heights, dtype=bool)
        mesh = _grid_mesh(xs, ys, heights)

    elif spec.kind in ("stairs_up", "stairs_down"):
        k = np.floor(gx / spec.step_length + _EPS).astype(np.int64) + 1
        k = np.clip(k, 0, spec.num_steps)
        heights = k.astype(np.float64) * spec.step_height
        if spec.kind == "stairs_down":
            heights = -heights
        validity = np.ones_like(heights, dtype=bool)
        mesh = _grid_mesh(xs, ys, heights)

    elif spec.kind == "stepping_stones":
        floor_height = -spec.floor_depth
        pitch, half, imax, jmax = _stone_lattice(spec)
        si = np.rint(gx / pitch).astype(np.int64)
        sj = np.rint(gy / pitch).astype(np.int64)
        in_lattice = (np.abs(si) <= imax) & (np.abs(sj) <= jmax)
        dx = gx - si * pitch
        dy = gy - sj * pitch
        if spec.circular_stones:
            on_stone = dx * dx + dy * dy <= (half + _EPS) ** 2
        else:
            on_stone = (np.abs(dx) <= half + _EPS) & (np.abs(dy) <= half + _EPS)
        validity = in_lattice & on_stone
        tops = _stone_top(spec, si, sj)
        heights = np.where(validity, tops, floor_height)

        parts = [make_plane(size=(xs[-1] - xs[0], ys[-1] - ys[0]),
                            center=(0.0, 0.0, floor_height))]
        for i in range(-imax, imax + 1):
            for j in range(-jmax, jmax + 1):
                top = float(_stone_top(spec, i, j))
                cx, cy = i * pitch, j * pitch
                if spec.circular_stones:
                    parts.append(_cylinder((cx, cy), half, floor_height, top))
                else:
                    parts.append(make_box(
                        size=(spec.stone_size, spec.stone_size, top - floor_height),
                        center=(cx, cy, (top + floor_height) / 2.0)))
        mesh = merge_meshes(parts)

    else:  # pragma: no cover - kinds validated at spec construction
        raise ValueError(f"unknown terrain kind {spec.kind!r}")

    hf = HeightField(
        origin=np.array([xs[0], ys[0], 0.0]),
        cell_size=cell,
        heights=heights,
        validity=validity,
        floor_height=floor_height,
    )
    return mesh, hf


def _dilate_chebyshev(mask: np.ndarray, radius: int) -> np.ndarray:
    """Square (Chebyshev-ball) dilation via shifted ORs."""
    if radius == 0:
        return mask.copy()
    ny, nx = mask.shape
    out = np.zeros_like(mask)
    for dy in range(-radius, radius + 1):
        ya, yb = max(0, dy), ny + min(0, dy)
        if ya >= yb:
            continue
        for dx in range(-radius, radius + 1):
            xa, xb = max(0, dx), nx + min(0, dx)
            if xa >= xb:
                continue
            out[ya:yb, xa:xb] |= mask[ya - dy:yb - dy, xa - dx:xb - dx]
    return out


def compute_edge_mask(hf: HeightField,
                      gradient_threshold: float = DEFAULT_GRADIENT_THRESHOLD,
                      dilation_radius: int = DEFAULT_DILATION_RADIUS) -> EdgeMask:
    """Dilated mask of cells standing above a drop-off or beside a void.

    A valid cell is a raw edge when some 4-neighbor is lower by more
    than the threshold, or when some 4-neighbor is invalid; the raw set
    is then dilated by a Chebyshev square of the given radius. Grid
    borders only consider in-grid neighbors, so a featureless terrain
    has an all-false mask.
    """
    if dilation_radius < 0:
        raise ValueError("dilation_radius must be >= 0")
    h, valid = hf.heights, hf.validity
    raw = np.zeros_like(valid)

    def mark(cell_slice, nb_slice):
        hc, hn = h[cell_slice], h[nb_slice]
        vc, vn = valid[cell_slice], valid[nb_slice]
        raw[cell_slice] |= vc & ((vn & (hc - hn > gradient_threshold)) | ~vn)

    mark(np.s_[:, :-1], np.s_[:, 1:])
    mark(np.s_[:, 1:], np.s_[:, :-1])
    mark(np.s_[:-1, :], np.s_[1:, :])
    mark(np.s_[1:, :], np.s_[:-1, :])

    return EdgeMask(
        mask=_dilate_chebyshev(raw, dilation_radius),
        dilation_radius_cells=int(dilation_radius),
        gradient_threshold=float(gradient_threshold),
    )


def foothold_validity(hf: HeightField, cell: tuple[int, int]) -> bool:
    """Support at a grid cell; anything beyond the grid is void."""
    iy, ix = cell
    if 0 <= iy < hf.ny and 0 <= ix < hf.nx:
        return bool(hf.validity[iy, ix])
    return False
