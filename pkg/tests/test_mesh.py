import numpy as np
import pytest

from multidepth.mesh import (TriMesh, load_obj, make_box, make_icosphere,
                             make_plane, merge_meshes, save_obj)
from multidepth.transforms import RigidPose, quat_from_euler


def test_trimesh_validation():
    v = np.zeros((3, 3))
    with pytest.raises(ValueError):
        TriMesh(v, np.array([[0, 1, 5]]))       # index out of range
    with pytest.raises(ValueError):
        TriMesh(np.array([[0.0, 0, 0]]), np.zeros((0, 3), dtype=np.int64),
                frame="nope")
    with pytest.raises(ValueError):
        TriMesh(np.full((3, 3), np.nan), np.array([[0, 1, 2]]))


def test_degenerate_triangles_dropped():
    v = np.array([[0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0], [2.0, 0, 0]])
    f = np.array([[0, 1, 2], [0, 1, 3]])        # second is collinear
    m = TriMesh(v, f)
    assert m.num_faces == 1
    assert m.dropped_degenerate == 1


def test_make_box_properties():
    m = make_box(size=(2.0, 4.0, 6.0), center=(1.0, 0.0, -1.0))
    assert m.num_faces == 12
    lo, hi = m.bounds()
    assert np.allclose(lo, [0.0, -2.0, -4.0])
    assert np.allclose(hi, [2.0, 2.0, 2.0])


def test_make_plane():
    m = make_plane(size=(4.0, 2.0), center=(0.0, 0.0, 0.5))
    assert m.num_faces == 2
    assert np.allclose(m.vertices[:, 2], 0.5)


def test_make_icosphere_radius_and_counts():
    m = make_icosphere(radius=2.0, subdivisions=2)
    r = np.linalg.norm(m.vertices, axis=1)
    assert np.allclose(r, 2.0, atol=1e-9)
    assert m.num_faces == 20 * 4 ** 2
    with pytest.raises(ValueError):
        make_icosphere(radius=1.0, subdivisions=9)


def test_transformed_moves_vertices():
    m = make_box(size=(1.0, 1.0, 1.0))
    pose = RigidPose(np.array([5.0, 0.0, 0.0]),
                     quat_from_euler(0.0, 0.0, np.pi / 2))
    t = m.transformed(pose)
    assert t.frame == "world"
    lo, hi = t.bounds()
    assert np.allclose((lo + hi) / 2, [5.0, 0.0, 0.0], atol=1e-9)


def test_merge_meshes_offsets_faces():
    a = make_box(size=(1.0, 1.0, 1.0))
    b = make_plane(size=(2.0, 2.0))
    m = merge_meshes([a, b])
    assert m.num_vertices == a.num_vertices + b.num_vertices
    assert m.num_faces == a.num_faces + b.num_faces
    assert m.faces[a.num_faces:].min() >= a.num_vertices


def test_obj_round_trip(tmp_path):
    m = make_icosphere(radius=0.5, subdivisions=1)
    path = tmp_path / "sphere.obj"
    save_obj(path, m)
    back = load_obj(path)
    assert back.num_vertices == m.num_vertices
    assert back.num_faces == m.num_faces
    assert np.allclose(back.vertices, m.vertices, atol=1e-9)
    assert np.array_equal(back.faces, m.faces)


def test_obj_quad_fan_and_negative_indices(tmp_path):
    path = tmp_path / "quad.obj"
    path.write_text(
        "# comment\n"
        "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
        "vn 0 0 1\n"
        "f 1 2 3 4\n"
        "f -4 -3 -2\n")
    m = load_obj(path)
    assert m.num_faces == 3          # quad fans into 2 + 1 explicit
    assert m.faces.max() == 3


def test_obj_face_with_texture_normal_indices(tmp_path):
    path = tmp_path / "tex.obj"
    path.write_text(
        "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
        "f 1/1/1 2/2/1 3/3/1\n")
    m = load_obj(path)
    assert m.num_faces == 1
    assert np.array_equal(m.faces[0], [0, 1, 2])
