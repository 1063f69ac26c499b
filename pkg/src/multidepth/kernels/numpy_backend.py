"""Pure-numpy fallback renderer.

Same contract as the JIT backend, different strategy: every ray in a
view is intersected against every triangle with vectorized
Moller-Trumbore, chunked over rays and triangles to bound temporaries.
Because one camera view shares a single origin per body frame, the
per-triangle edge vectors and the tvec/qvec products are computed once
per chunk instead of per ray.

Views (env, camera) are independent and write disjoint output slices, so
they are fanned out over a thread pool. Results do not depend on the
worker count; the early-termination flag is accepted but has no effect
on the arithmetic (a full minimum is taken either way).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..transforms import quat_to_matrix

RAY_EPSILON = 1e-6
DET_EPSILON = 1e-12

_RAY_CHUNK = 256
_TRI_CHUNK = 4096


def _min_t(origin: np.ndarray, dirs: np.ndarray,
           v0: np.ndarray, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
    """Per-ray minimum hit parameter from one shared origin, inf on miss."""
    num_rays = len(dirs)
    best = np.full(num_rays, np.inf)
    if len(v0) == 0:
        return best
    for fs in range(0, len(v0), _TRI_CHUNK):
        fe = min(fs + _TRI_CHUNK, len(v0))
        e1 = v1[fs:fe] - v0[fs:fe]
        e2 = v2[fs:fe] - v0[fs:fe]
        tvec = origin[None, :] - v0[fs:fe]          # (F, 3), origin shared
        qvec = np.cross(tvec, e1)                   # (F, 3)
        t_num = np.einsum("fk,fk->f", e2, qvec)     # (F,)
        u_base = tvec                               # dotted against pvec below
        for rs in range(0, num_rays, _RAY_CHUNK):
            re = min(rs + _RAY_CHUNK, num_rays)
            d = dirs[rs:re]
            pvec = np.cross(d[:, None, :], e2[None, :, :])  # (r, F, 3)
            det = np.einsum("rfk,fk->rf", pvec, e1)
            ok = np.abs(det) >= DET_EPSILON
            inv = np.zeros_like(det)
            np.divide(1.0, det, out=inv, where=ok)
            u = np.einsum("fk,rfk->rf", u_base, pvec) * inv
            v = (d @ qvec.T) * inv
            t = t_num[None, :] * inv
            valid = ok & (u >= 0.0) & (u <= 1.0) & (v >= 0.0) \
                & (u + v <= 1.0) & (t > RAY_EPSILON)
            t = np.where(valid, t, np.inf)
            np.minimum(best[rs:re], t.min(axis=1), out=best[rs:re])
    return best


def _render_view(flat, body_pos, body_rot, cam_pos, cam_rot,
                 ray_dirs, ray_scale, d_max, out, e, c):
    er = e if ray_dirs.shape[0] > 1 else 0
    dirs_cam = ray_dirs[er, c].reshape(-1, 3)
    scale = ray_scale[er, c].reshape(-1)
    rot = quat_to_matrix(cam_rot[e, c])
    dirs_w = dirs_cam @ rot.T
    origin = cam_pos[e, c]

    # accumulate in meters so body and terrain hits compare directly
    best = np.full(len(dirs_w), float(d_max[c]))
    num_bodies = len(flat.body_root)
    for b in range(num_bodies):
        s = flat.body_tri_offsets[b]
        t_end = flat.body_tri_offsets[b + 1]
        # v @ R applies R^T: world ray expressed in the body frame
        body_mat = quat_to_matrix(body_rot[e, b])
        o_b = (origin - body_pos[e, b]) @ body_mat
        d_b = dirs_w @ body_mat
        t = _min_t(o_b, d_b,
                   flat.tri_v0[s:t_end], flat.tri_v1[s:t_end], flat.tri_v2[s:t_end])
        np.minimum(best, t * scale, out=best)
    if len(flat.g_tri_v0):
        t = _min_t(origin, dirs_w, flat.g_tri_v0, flat.g_tri_v1, flat.g_tri_v2)
        np.minimum(best, t * scale, out=best)
    h, w = ray_dirs.shape[2], ray_dirs.shape[3]
    out[e, c] = best.reshape(h, w).astype(np.float32)


def render_batch(flat, body_pos, body_rot, cam_pos, cam_rot, ray_dirs,
                 ray_scale, d_max, early_termination, out, threads):
    del early_termination  # bounding is a traversal optimization; minima agree
    n_envs, n_cams = out.shape[0], out.shape[1]
    views = [(e, c) for e in range(n_envs) for c in range(n_cams)]

    def work(view):
        e, c = view
        _render_view(flat, body_pos, body_rot, cam_pos, cam_rot,
                     ray_dirs, ray_scale, d_max, out, e, c)

    workers = max(1, min(int(threads), len(views)))
    if workers == 1:
        for view in views:
            work(view)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # list() propagates worker exceptions
            list(pool.map(work, views))
