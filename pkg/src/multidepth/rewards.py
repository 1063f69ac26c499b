"""Geometric reward oracles: foot-edge, foothold-coverage, torso tilt.

These are pure functions of terrain and robot state, independent of any
training loop: a binary penalty for contacts whose sole touches a
drop-off band, a dense support-coverage fraction sampled across the
sole, and an exponential torso-orientation reward on projected gravity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .terrain import EdgeMask, HeightField
from .transforms import RigidPose

DEFAULT_FOOT_LENGTH = 0.21
DEFAULT_FOOT_WIDTH = 0.09
DEFAULT_SOLE_GRID = (5, 3)   # samples along (length, width)
DEFAULT_HEIGHT_TOL = 0.03

UNIT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class FootState:
    """Sole pose plus contact flag and precomputed sole sample points.

    The sole rectangle is centered on the pose origin in the foot's xy
    plane (x along the length, y across the width, z normal). Sample
    points default to an even grid spanning the rectangle; custom
    points must stay inside it.
    """
    pose: RigidPose
    in_contact: bool
    length: float = DEFAULT_FOOT_LENGTH
    width: float = DEFAULT_FOOT_WIDTH
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0:
            raise ValueError("foot length and width must be positive")
        if self.samples is None:
            nl, nw = DEFAULT_SOLE_GRID
            xs = np.linspace(-self.length / 2.0, self.length / 2.0, nl)
            ys = np.linspace(-self.width / 2.0, self.width / 2.0, nw)
            gx, gy = np.meshgrid(xs, ys, indexing="ij")
            pts = np.column_stack(
                [gx.ravel(), gy.ravel(), np.zeros(gx.size)])
        else:
            pts = np.ascontiguousarray(self.samples, dtype=np.float64)
            if pts.ndim != 2 or pts.shape[1] != 3:
                raise ValueError("samples must have shape (S, 3)")
            tol = 1e-12
            if (np.any(np.abs(pts[:, 0]) > self.length / 2.0 + tol)
                    or np.any(np.abs(pts[:, 1]) > self.width / 2.0 + tol)):
                raise ValueError("sole sample points must lie within the sole rectangle")
        object.__setattr__(self, "samples", pts)

    def world_samples(self) -> np.ndarray:
        """Sole sample points in world coordinates, shape (S, 3)."""
        return self.pose.apply_batch(self.samples)


def foot_edge_penalty(foot: FootState, mask: EdgeMask, hf: HeightField) -> float:
    """1.0 iff the foot is in contact and any sole sample maps to a
    true mask cell; samples beyond the grid never trigger it."""
    if mask.mask.shape != hf.heights.shape:
        raise ValueError("edge mask does not match the height field grid")
    if not foot.in_contact:
        return 0.0
    for x, y, _ in foot.world_samples():
        cell = hf.cell_index(float(x), float(y))
        if cell is not None and mask.mask[cell]:
            return 1.0
    return 0.0


def foothold_coverage(foot: FootState, hf: HeightField, *,
                      height_tol: float = DEFAULT_HEIGHT_TOL,
                      coverage_threshold: float | None = None,
                      ) -> tuple[float, float]:
    """(coverage, penalty) for a planted foot.

    Coverage is the fraction of sole samples over supported cells whose
    terrain height is within ``height_tol`` of the sample's sole plane;
    a foot not in contact has no defined coverage and scores
    (1.0, 0.0). The penalty is dense 1 - coverage, or binary against
    ``coverage_threshold`` when one is given.
    """
    if height_tol < 0:
        raise ValueError("height_tol must be >= 0")
    if not foot.in_contact:
        return 1.0, 0.0
    pts = foot.world_samples()
    heights, valid = hf.sample_batch(pts[:, 0], pts[:, 1])
    supported = valid & (np.abs(pts[:, 2] - heights) <= height_tol)
    coverage = float(np.count_nonzero(supported)) / len(pts)
    if coverage_threshold is None:
        penalty = 1.0 - coverage
    else:
        penalty = 1.0 if coverage < coverage_threshold else 0.0
    return coverage, penalty


@dataclass(frozen=True)
class TorsoRewardConfig:
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ValueError("sigma must be positive")


def torso_orientation_reward(g_proj, g_ref,
                             config: TorsoRewardConfig = TorsoRewardConfig(),
                             ) -> float:
    """exp(-||g_proj - g_ref||^2 / sigma) for unit gravity directions.

    Both inputs must be finite unit vectors (tolerance 1e-6); the result
    lies in (0, 1] with the maximum only at equality.
    """
    gp = np.asarray(g_proj, dtype=np.float64)
    gr = np.asarray(g_ref, dtype=np.float64)
    if gp.shape != (3,) or gr.shape != (3,):
        raise ValueError("gravity directions must be 3-vectors")
    if not (np.all(np.isfinite(gp)) and np.all(np.isfinite(gr))):
        raise ValueError("gravity directions must be finite")
    for name, v in (("g_proj", gp), ("g_ref", gr)):
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"{name} must be unit-norm (got |v|={norm!r})")
    err = gp - gr
    return math.exp(-float(err @ err) / config.sigma)
