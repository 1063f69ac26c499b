import numpy as np
import pytest

from multidepth.bvh import (LEAF_SIZE, build_bvh, query_bvh, ray_triangle,
                            validate_bvh)
from multidepth.mesh import TriMesh, make_box, make_icosphere

from oracles import ray_depths


def random_mesh(rng, num_tris=60, spread=2.0):
    base = rng.uniform(-spread, spread, size=(num_tris, 3))
    verts = np.repeat(base, 3, axis=0)
    verts += rng.uniform(-0.4, 0.4, size=verts.shape)
    faces = np.arange(num_tris * 3).reshape(-1, 3)
    return TriMesh(verts, faces)


def test_build_validates_on_primitives():
    for mesh in (make_box(size=(1, 2, 3)), make_icosphere(0.5, subdivisions=2)):
        bvh = build_bvh(mesh)
        validate_bvh(bvh, mesh)
        assert bvh.num_triangles == mesh.num_faces


def test_build_validates_on_random_soup():
    rng = np.random.default_rng(11)
    for _ in range(5):
        mesh = random_mesh(rng)
        validate_bvh(build_bvh(mesh), mesh)


def test_leaf_size_respected():
    mesh = make_icosphere(1.0, subdivisions=2)
    bvh = build_bvh(mesh)
    leaves = bvh.count[bvh.left == -1]
    assert leaves.max() <= LEAF_SIZE
    assert leaves.sum() == mesh.num_faces


def test_ray_triangle_basics():
    v0 = np.array([0.0, 0.0, 0.0])
    v1 = np.array([1.0, 0.0, 0.0])
    v2 = np.array([0.0, 1.0, 0.0])
    o = np.array([0.2, 0.2, 1.0])
    down = np.array([0.0, 0.0, -1.0])
    assert ray_triangle(o, down, v0, v1, v2, np.inf) == pytest.approx(1.0)
    # double-sided: from below
    up = np.array([0.0, 0.0, 1.0])
    below = np.array([0.2, 0.2, -1.0])
    assert ray_triangle(below, up, v0, v1, v2, np.inf) == pytest.approx(1.0)
    # t_max cuts off the hit, inclusive bound accepts exact t
    assert np.isinf(ray_triangle(o, down, v0, v1, v2, 0.5))
    assert ray_triangle(o, down, v0, v1, v2, 1.0) == pytest.approx(1.0)
    # parallel ray misses
    side = np.array([1.0, 0.0, 0.0])
    assert np.isinf(ray_triangle(o, side, v0, v1, v2, np.inf))
    # outside the triangle misses
    far = np.array([5.0, 5.0, 1.0])
    assert np.isinf(ray_triangle(far, down, v0, v1, v2, np.inf))


def test_query_matches_brute_force():
    rng = np.random.default_rng(12)
    for trial in range(8):
        mesh = random_mesh(rng, num_tris=40)
        bvh = build_bvh(mesh)
        tris = mesh.triangles()
        for _ in range(40):
            origin = rng.uniform(-3.0, 3.0, size=3)
            direction = rng.standard_normal(3)
            t, face = query_bvh(bvh, origin, direction)
            depth = ray_depths(origin, direction[None, :], np.ones(1),
                               tris, d_max=np.inf)[0]
            if np.isinf(depth):
                assert np.isinf(t) and face == -1
            else:
                assert t == pytest.approx(depth, abs=1e-9)
                # reported face really is hit at t
                v0, v1, v2 = tris[face]
                assert ray_triangle(origin, direction, v0, v1, v2,
                                    np.inf) == pytest.approx(t, abs=1e-9)


def test_query_respects_t_max():
    mesh = make_box(size=(1.0, 1.0, 1.0))
    bvh = build_bvh(mesh)
    origin = np.array([0.0, 0.0, 5.0])
    down = np.array([0.0, 0.0, -1.0])
    t, face = query_bvh(bvh, origin, down)
    assert t == pytest.approx(4.5)
    t2, face2 = query_bvh(bvh, origin, down, t_max=4.0)
    assert np.isinf(t2) and face2 == -1


def test_build_deterministic():
    mesh = make_icosphere(0.7, subdivisions=2)
    a = build_bvh(mesh)
    b = build_bvh(mesh)
    assert np.array_equal(a.tri_index, b.tri_index)
    assert np.array_equal(a.node_min, b.node_min)
    assert np.array_equal(a.left, b.left)
