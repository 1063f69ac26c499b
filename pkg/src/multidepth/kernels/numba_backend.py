"""JIT-compiled batch renderer.

One parallel kernel walks every (env, camera, row) work item, casting one
ray per pixel. Dynamic bodies are queried in their local frames by
rotating the ray with the conjugate of the body quaternion; the static
terrain is queried in the world frame afterwards, bounded by the best
body hit when early termination is on. All traversal state is scalar or
a small per-row stack, so iterations are independent and the output is
bit-identical for any thread count.
"""

from __future__ import annotations

import numba
import numpy as np
from numba import njit, prange

# Deep enough for a median-split tree over ~2^60 triangles; the builder
# can never exceed it in practice.
STACK_DEPTH = 128
RAY_EPSILON = 1e-6
DET_EPSILON = 1e-12


@njit(cache=True, inline="always")
def _rotate(qw, qx, qy, qz, vx, vy, vz):
    # v + 2 w (q_v x v) + 2 q_v x (q_v x v), expanded
    tx = 2.0 * (qy * vz - qz * vy)
    ty = 2.0 * (qz * vx - qx * vz)
    tz = 2.0 * (qx * vy - qy * vx)
    rx = vx + qw * tx + (qy * tz - qz * ty)
    ry = vy + qw * ty + (qz * tx - qx * tz)
    rz = vz + qw * tz + (qx * ty - qy * tx)
    return rx, ry, rz


@njit(cache=True, inline="always")
def _tri_t(v0, v1, v2, i, ox, oy, oz, dx, dy, dz, t_max):
    """Moller-Trumbore hit parameter for triangle row i, or t_max + 1.0."""
    e1x = v1[i, 0] - v0[i, 0]
    e1y = v1[i, 1] - v0[i, 1]
    e1z = v1[i, 2] - v0[i, 2]
    e2x = v2[i, 0] - v0[i, 0]
    e2y = v2[i, 1] - v0[i, 1]
    e2z = v2[i, 2] - v0[i, 2]
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    miss = t_max + 1.0
    if det < DET_EPSILON and det > -DET_EPSILON:
        return miss
    inv_det = 1.0 / det
    tx = ox - v0[i, 0]
    ty = oy - v0[i, 1]
    tz = oz - v0[i, 2]
    u = (tx * px + ty * py + tz * pz) * inv_det
    if u < 0.0 or u > 1.0:
        return miss
    qx = ty * e1z - tz * e1y
    qy = tz * e1x - tx * e1z
    qz = tx * e1y - ty * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv_det
    if v < 0.0 or u + v > 1.0:
        return miss
    t = (e2x * qx + e2y * qy + e2z * qz) * inv_det
    if t <= RAY_EPSILON or t > t_max:
        return miss
    return t


@njit(cache=True, inline="always")
def _slab_hit(bx0, by0, bz0, bx1, by1, bz1, ox, oy, oz, dx, dy, dz, bound):
    t0 = 0.0
    t1 = bound
    if dx == 0.0:
        if ox < bx0 or ox > bx1:
            return False
    else:
        inv = 1.0 / dx
        ta = (bx0 - ox) * inv
        tb = (bx1 - ox) * inv
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return False
    if dy == 0.0:
        if oy < by0 or oy > by1:
            return False
    else:
        inv = 1.0 / dy
        ta = (by0 - oy) * inv
        tb = (by1 - oy) * inv
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return False
    if dz == 0.0:
        if oz < bz0 or oz > bz1:
            return False
    else:
        inv = 1.0 / dz
        ta = (bz0 - oz) * inv
        tb = (bz1 - oz) * inv
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return False
    return True


@njit(cache=True, inline="always")
def _closest_hit(node_min, node_max, left, right, start, count,
                 v0, v1, v2, root,
                 ox, oy, oz, dx, dy, dz, t_max, stack):
    """Nearest hit t in (RAY_EPSILON, t_max], or t_max when nothing is closer."""
    best = t_max
    top = 0
    stack[0] = root
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        if not _slab_hit(node_min[node, 0], node_min[node, 1], node_min[node, 2],
                         node_max[node, 0], node_max[node, 1], node_max[node, 2],
                         ox, oy, oz, dx, dy, dz, best):
            continue
        if left[node] < 0:
            s = start[node]
            e = s + count[node]
            for i in range(s, e):
                t = _tri_t(v0, v1, v2, i, ox, oy, oz, dx, dy, dz, best)
                if t < best:
                    best = t
        else:
            stack[top] = right[node]
            top += 1
            stack[top] = left[node]
            top += 1
    return best


@njit(parallel=True, cache=True)
def _render_kernel(cam_pos, cam_rot, ray_dirs, ray_scale,
                   body_pos, body_rot, body_root,
                   node_min, node_max, left, right, start, count,
                   tri_v0, tri_v1, tri_v2,
                   g_node_min, g_node_max, g_left, g_right, g_start, g_count,
                   g_tri_v0, g_tri_v1, g_tri_v2,
                   d_max, early_term, out):
    N, C, H, W = out.shape
    B = body_root.shape[0]
    RN = ray_dirs.shape[0]
    has_terrain = g_node_min.shape[0] > 0
    rows = N * C * H
    for row in prange(rows):
        e = row // (C * H)
        rem = row - e * (C * H)
        c = rem // H
        y = rem - c * H
        er = e if RN > 1 else 0
        stack = np.empty(STACK_DEPTH, np.int64)
        far = d_max[c]
        cqw = cam_rot[e, c, 0]
        cqx = cam_rot[e, c, 1]
        cqy = cam_rot[e, c, 2]
        cqz = cam_rot[e, c, 3]
        cox = cam_pos[e, c, 0]
        coy = cam_pos[e, c, 1]
        coz = cam_pos[e, c, 2]
        for x in range(W):
            m = ray_scale[er, c, y, x]
            wdx, wdy, wdz = _rotate(cqw, cqx, cqy, cqz,
                                    ray_dirs[er, c, y, x, 0],
                                    ray_dirs[er, c, y, x, 1],
                                    ray_dirs[er, c, y, x, 2])
            z_star = far
            for b in range(B):
                bound = z_star if early_term else far
                t_bound = bound / m
                # conjugate quaternion: rotate world ray into body frame
                bqw = body_rot[e, b, 0]
                bqx = -body_rot[e, b, 1]
                bqy = -body_rot[e, b, 2]
                bqz = -body_rot[e, b, 3]
                rx = cox - body_pos[e, b, 0]
                ry = coy - body_pos[e, b, 1]
                rz = coz - body_pos[e, b, 2]
                box_, boy_, boz_ = _rotate(bqw, bqx, bqy, bqz, rx, ry, rz)
                bdx, bdy, bdz = _rotate(bqw, bqx, bqy, bqz, wdx, wdy, wdz)
                t = _closest_hit(node_min, node_max, left, right, start, count,
                                 tri_v0, tri_v1, tri_v2, body_root[b],
                                 box_, boy_, boz_, bdx, bdy, bdz, t_bound, stack)
                cand = m * t
                if cand < z_star:
                    z_star = cand
            if has_terrain:
                bound = z_star if early_term else far
                t_bound = bound / m
                t = _closest_hit(g_node_min, g_node_max, g_left, g_right,
                                 g_start, g_count,
                                 g_tri_v0, g_tri_v1, g_tri_v2, 0,
                                 cox, coy, coz, wdx, wdy, wdz, t_bound, stack)
                cand = m * t
                if cand < z_star:
                    z_star = cand
            out[e, c, y, x] = z_star


def render_batch(flat, body_pos, body_rot, cam_pos, cam_rot, ray_dirs,
                 ray_scale, d_max, early_termination, out, threads):
    n = max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    _render_kernel(cam_pos, cam_rot, ray_dirs, ray_scale,
                   body_pos, body_rot, flat.body_root,
                   flat.node_min, flat.node_max, flat.left, flat.right,
                   flat.start, flat.count,
                   flat.tri_v0, flat.tri_v1, flat.tri_v2,
                   flat.g_node_min, flat.g_node_max, flat.g_left, flat.g_right,
                   flat.g_start, flat.g_count,
                   flat.g_tri_v0, flat.g_tri_v1, flat.g_tri_v2,
                   d_max, early_termination, out)
