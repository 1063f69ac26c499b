"""Triangle meshes: storage, validation, OBJ I/O, and primitive builders."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Triangles thinner than this are slivers from mesher numerics, not geometry;
# keeping them would only feed degenerate normals to the intersection tests.
DEGENERATE_AREA = 1e-12

FRAMES = ("world", "body-local")


@dataclass(frozen=True)
class TriMesh:
    """Indexed triangle mesh.

    vertices: (V, 3) float64
    faces:    (F, 3) int64, each row indexing `vertices`
    frame:    which frame the vertices live in ("world" or "body-local")

    Degenerate triangles (area < DEGENERATE_AREA m^2) are dropped at
    construction; `dropped_degenerate` reports how many.
    """

    vertices: np.ndarray
    faces: np.ndarray
    frame: str = "world"
    dropped_degenerate: int = field(default=0, init=False, compare=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=np.float64)
        f = np.ascontiguousarray(self.faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must have shape (V, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces must have shape (F, 3), got {f.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("mesh vertices must be finite")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}, got {self.frame!r}")
        dropped = 0
        if f.size:
            tri = v[f]
            areas = 0.5 * np.linalg.norm(
                np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1
            )
            keep = areas >= DEGENERATE_AREA
            dropped = int(np.count_nonzero(~keep))
            if dropped:
                f = np.ascontiguousarray(f[keep])
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "dropped_degenerate", dropped)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned (min, max) corners over all vertices."""
        if self.num_vertices == 0:
            raise ValueError("empty mesh has no bounds")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def triangles(self) -> np.ndarray:
        """Dereferenced (F, 3, 3) triangle corner array."""
        return self.vertices[self.faces]

    def transformed(self, pose) -> "TriMesh":
        """Vertices mapped through `pose`; the result is a world-frame mesh."""
        return TriMesh(pose.apply_batch(self.vertices), self.faces, frame="world")

    def in_frame(self, frame: str) -> "TriMesh":
        """Same geometry, retagged."""
        return TriMesh(self.vertices, self.faces, frame=frame)


def load_obj(path, frame: str = "world") -> TriMesh:
    """Minimal Wavefront OBJ reader: `v` and triangular/polygonal `f` lines.

    Polygon faces are fan-triangulated. Texture/normal indices after `/`
    are ignored. Negative (relative) indices are supported.
    """
    vertices: list[list[float]] = []
    faces: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise ValueError(f"{path}:{lineno}: vertex needs 3 coordinates")
                vertices.append([float(x) for x in parts[1:4]])
            elif tag == "f":
                if len(parts) < 4:
                    raise ValueError(f"{path}:{lineno}: face needs at least 3 vertices")
                idx = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    if i < 0:
                        i = len(vertices) + i
                    else:
                        i = i - 1
                    idx.append(i)
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
            # silently skip vn/vt/usemtl/etc.
    return TriMesh(np.array(vertices, dtype=np.float64).reshape(-1, 3),
                   np.array(faces, dtype=np.int64).reshape(-1, 3), frame=frame)


def save_obj(path, mesh: TriMesh) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def make_box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Axis-aligned box, 12 triangles, outward-facing winding."""
    sx, sy, sz = (0.5 * float(s) for s in size)
    cx, cy, cz = (float(c) for c in center)
    corners = np.array(
        [
            [cx - sx, cy - sy, cz - sz],
            [cx + sx, cy - sy, cz - sz],
            [cx + sx, cy + sy, cz - sz],
            [cx - sx, cy + sy, cz - sz],
            [cx - sx, cy - sy, cz + sz],
            [cx + sx, cy - sy, cz + sz],
            [cx + sx, cy + sy, cz + sz],
            [cx - sx, cy + sy, cz + sz],
        ]
    )
    quads = [
        (0, 3, 2, 1),  # bottom (-z)
        (4, 5, 6, 7),  # top (+z)
        (0, 1, 5, 4),  # -y
        (2, 3, 7, 6),  # +y
        (1, 2, 6, 5),  # +x
        (3, 0, 4, 7),  # -x
    ]
    faces = []
    for a, b, c, d in quads:
        faces.append([a, b, c])
        faces.append([a, c, d])
    return TriMesh(corners, np.array(faces, dtype=np.int64))


def make_plane(size=(1.0, 1.0), center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Two-triangle rectangle in the z = center_z plane."""
    hx, hy = 0.5 * float(size[0]), 0.5 * float(size[1])
    cx, cy, cz = (float(c) for c in center)
    verts = np.array(
        [
            [cx - hx, cy - hy, cz],
            [cx + hx, cy - hy, cz],
            [cx + hx, cy + hy, cz],
            [cx - hx, cy + hy, cz],
        ]
    )
    faces = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    return TriMesh(verts, faces)


def make_icosphere(radius: float = 0.5, center=(0.0, 0.0, 0.0), subdivisions: int = 1) -> TriMesh:
    """Icosahedron-based sphere approximation."""
    if subdivisions < 0 or subdivisions > 5:
        raise ValueError("subdivisions must be in [0, 5]")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    for _ in range(subdivisions):
        vlist = list(verts)
        cache: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key in cache:
                return cache[key]
            m = vlist[a] + vlist[b]
            m = m / np.linalg.norm(m)
            vlist.append(m)
            cache[key] = len(vlist) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.array(vlist)
        faces = np.array(new_faces, dtype=np.int64)
    verts = verts * float(radius) + np.asarray(center, dtype=np.float64)
    return TriMesh(verts, faces)


def merge_meshes(meshes, frame: str = "world") -> TriMesh:
    """Concatenate meshes into one, offsetting face indices."""
    verts, faces, offset = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        offset += m.num_vertices
    if not verts:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), frame=frame)
    return TriMesh(np.vstack(verts), np.vstack(faces), frame=frame)
