"""Bounding volume hierarchy over triangles.

Build once per mesh, then query with rays expressed in the mesh's local
frame; moving a body never requires a rebuild because rays are transformed
into the body frame instead. The build is deterministic: top-down median
split on the longest axis of the node's bounding box, stable argsort on
triangle centroids, leaves hold at most LEAF_SIZE triangles.

The tree is stored as flat arrays so the traversal kernels can run without
objects:
  node_min, node_max : (M, 3) float64 node bounds
  left, right        : (M,) int32 child indices, -1 for leaves
  start, count       : (M,) int32 leaf triangle ranges into the permuted
                       triangle arrays (count == 0 for inner nodes)
  tri_v0/v1/v2       : (F, 3) float64 triangle corners in permuted order
  tri_index          : (F,) int64 permuted-to-original face index map
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import TriMesh

LEAF_SIZE = 4
# Hits closer than this along the ray parameter are ignored so a ray
# starting exactly on a surface does not re-hit it.
RAY_EPSILON = 1e-6
DET_EPSILON = 1e-12


@dataclass(frozen=True)
class BVH:
    node_min: np.ndarray
    node_max: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    tri_v0: np.ndarray
    tri_v1: np.ndarray
    tri_v2: np.ndarray
    tri_index: np.ndarray

    @property
    def num_nodes(self) -> int:
        return len(self.node_min)

    @property
    def num_triangles(self) -> int:
        return len(self.tri_v0)

    @property
    def max_depth(self) -> int:
        depth = np.zeros(self.num_nodes, dtype=np.int32)
        best = 0
        for i in range(self.num_nodes):
            d = depth[i]
            best = max(best, int(d))
            if self.left[i] >= 0:
                depth[self.left[i]] = d + 1
                depth[self.right[i]] = d + 1
        return best


def build_bvh(mesh: TriMesh, leaf_size: int = LEAF_SIZE) -> BVH:
    """Deterministic top-down median-split build. Single-threaded by design."""
    if mesh.num_faces == 0:
        raise ValueError("cannot build a BVH over an empty mesh")
    if leaf_size < 1:
        raise ValueError("leaf_size must be >= 1")

    tris = mesh.triangles()  # (F, 3, 3)
    tri_min = tris.min(axis=1)
    tri_max = tris.max(axis=1)
    centroids = 0.5 * (tri_min + tri_max)
    order = np.arange(mesh.num_faces, dtype=np.int64)

    node_min: list[np.ndarray] = []
    node_max: list[np.ndarray] = []
    left: list[int] = []
    right: list[int] = []
    start: list[int] = []
    count: list[int] = []

    def new_node(lo: int, hi: int) -> int:
        idx = len(node_min)
        sel = order[lo:hi]
        node_min.append(tri_min[sel].min(axis=0))
        node_max.append(tri_max[sel].max(axis=0))
        left.append(-1)
        right.append(-1)
        start.append(0)
        count.append(0)
        return idx

    # Explicit stack keeps the build iterative; entries are (node, lo, hi).
    root = new_node(0, mesh.num_faces)
    stack = [(root, 0, mesh.num_faces)]
    while stack:
        node, lo, hi = stack.pop()
        n = hi - lo
        if n <= leaf_size:
            start[node] = lo
            count[node] = n
            continue
        extent = node_max[node] - node_min[node]
        axis = int(np.argmax(extent))
        sel = order[lo:hi]
        # Stable sort on centroid keeps the build order-independent of
        # floating ties and therefore reproducible.
        perm = np.argsort(centroids[sel, axis], kind="stable")
        order[lo:hi] = sel[perm]
        mid = lo + n // 2
        lc = new_node(lo, mid)
        rc = new_node(mid, hi)
        left[node] = lc
        right[node] = rc
        stack.append((rc, mid, hi))
        stack.append((lc, lo, mid))

    v = tris[order]
    return BVH(
        node_min=np.ascontiguousarray(node_min, dtype=np.float64),
        node_max=np.ascontiguousarray(node_max, dtype=np.float64),
        left=np.ascontiguousarray(left, dtype=np.int32),
        right=np.ascontiguousarray(right, dtype=np.int32),
        start=np.ascontiguousarray(start, dtype=np.int32),
        count=np.ascontiguousarray(count, dtype=np.int32),
        tri_v0=np.ascontiguousarray(v[:, 0, :]),
        tri_v1=np.ascontiguousarray(v[:, 1, :]),
        tri_v2=np.ascontiguousarray(v[:, 2, :]),
        tri_index=np.ascontiguousarray(order),
    )


def ray_triangle(origin, direction, v0, v1, v2, t_max: float) -> float:
    """Double-sided Moller-Trumbore; returns the hit parameter or inf.

    Hits count when RAY_EPSILON < t <= t_max. The bound is inclusive so
    queries clamped exactly at a previous hit still report it.
    """
    e1 = v1 - v0
    e2 = v2 - v0
    pvec = np.cross(direction, e2)
    det = float(np.dot(e1, pvec))
    if abs(det) < DET_EPSILON:
        return np.inf
    inv_det = 1.0 / det
    tvec = origin - v0
    u = float(np.dot(tvec, pvec)) * inv_det
    if u < 0.0 or u > 1.0:
        return np.inf
    qvec = np.cross(tvec, e1)
    v = float(np.dot(direction, qvec)) * inv_det
    if v < 0.0 or u + v > 1.0:
        return np.inf
    t = float(np.dot(e2, qvec)) * inv_det
    if t <= RAY_EPSILON or t > t_max:
        return np.inf
    return t


def _slab_hit(origin, direction, bmin, bmax, t_max: float) -> bool:
    """Branchy AABB slab test, tolerant of zero direction components."""
    t0, t1 = 0.0, t_max
    for k in range(3):
        o, d = origin[k], direction[k]
        if d == 0.0:
            if o < bmin[k] or o > bmax[k]:
                return False
            continue
        inv = 1.0 / d
        ta = (bmin[k] - o) * inv
        tb = (bmax[k] - o) * inv
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return False
    return True


def query_bvh(bvh: BVH, origin, direction, t_max: float = np.inf) -> tuple[float, int]:
    """Closest hit of one ray against the tree.

    Returns (t, face_index) with face_index referring to the original mesh
    face order, or (inf, -1) on miss. Reference implementation; the batch
    kernels in `multidepth.kernels` do the heavy lifting.
    """
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    best_t = float(t_max)
    best_face = -1
    stack = [0]
    while stack:
        node = stack.pop()
        if not _slab_hit(origin, direction, bvh.node_min[node], bvh.node_max[node], best_t):
            continue
        if bvh.left[node] < 0:
            s, c = int(bvh.start[node]), int(bvh.count[node])
            for i in range(s, s + c):
                t = ray_triangle(origin, direction, bvh.tri_v0[i], bvh.tri_v1[i], bvh.tri_v2[i], best_t)
                if t < best_t:
                    best_t = t
                    best_face = int(bvh.tri_index[i])
        else:
            stack.append(int(bvh.right[node]))
            stack.append(int(bvh.left[node]))
    if best_face < 0:
        return np.inf, -1
    return best_t, best_face


def validate_bvh(bvh: BVH, mesh=None) -> None:
    """Structural invariants; raises AssertionError on violation.

    With ``mesh`` given, also checks the permuted triangle arrays match
    the source mesh through ``tri_index``.
    """
    n = bvh.num_nodes
    seen = np.zeros(bvh.num_triangles, dtype=bool)
    for i in range(n):
        assert np.all(bvh.node_min[i] <= bvh.node_max[i] + 1e-12), f"node {i} has inverted bounds"
        if bvh.left[i] >= 0:
            l, r = int(bvh.left[i]), int(bvh.right[i])
            assert 0 <= l < n and 0 <= r < n, f"node {i} child out of range"
            assert bvh.count[i] == 0, f"inner node {i} holds triangles"
            for c in (l, r):
                assert np.all(bvh.node_min[i] <= bvh.node_min[c] + 1e-9), f"child {c} escapes parent {i}"
                assert np.all(bvh.node_max[c] <= bvh.node_max[i] + 1e-9), f"child {c} escapes parent {i}"
        else:
            s, c = int(bvh.start[i]), int(bvh.count[i])
            assert c >= 1, f"leaf {i} is empty"
            assert 0 <= s and s + c <= bvh.num_triangles, f"leaf {i} range out of bounds"
            assert not seen[s:s + c].any(), f"leaf {i} overlaps another leaf"
            seen[s:s + c] = True
            for j in range(s, s + c):
                for corner in (bvh.tri_v0[j], bvh.tri_v1[j], bvh.tri_v2[j]):
                    assert np.all(corner >= bvh.node_min[i] - 1e-9), f"triangle {j} escapes leaf {i}"
                    assert np.all(corner <= bvh.node_max[i] + 1e-9), f"triangle {j} escapes leaf {i}"
    assert seen.all(), "some triangles belong to no leaf"
    assert len(np.unique(bvh.tri_index)) == bvh.num_triangles, "triangle permutation is not a bijection"
    if mesh is not None:
        tris = mesh.triangles()
        assert bvh.num_triangles == len(tris), "triangle count differs from mesh"
        src = tris[bvh.tri_index]
        assert (np.array_equal(src[:, 0], bvh.tri_v0)
                and np.array_equal(src[:, 1], bvh.tri_v1)
                and np.array_equal(src[:, 2], bvh.tri_v2)), \
            "permuted triangle data does not match the mesh"
