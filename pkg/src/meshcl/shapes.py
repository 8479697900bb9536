"""Reference solids and subdivided spheres.

All face lists are wound counter-clockwise seen from outside; for the convex
solids this is enforced programmatically against the centroid, so the tables
below only need to list the correct vertex triples.
"""

from __future__ import annotations

import numpy as np

from .mesh import Mesh


def _oriented(vertices: np.ndarray, faces: list[tuple[int, int, int]]) -> np.ndarray:
    """Flip any face whose normal points toward the centroid (convex solids)."""
    vertices = np.asarray(vertices, dtype=np.float64)
    center = vertices.mean(axis=0)
    out = []
    for a, b, c in faces:
        n = np.cross(vertices[b] - vertices[a], vertices[c] - vertices[a])
        mid = (vertices[a] + vertices[b] + vertices[c]) / 3.0
        out.append((a, b, c) if float(n @ (mid - center)) > 0 else (a, c, b))
    return np.array(out, dtype=np.int64)


def tetrahedron() -> Mesh:
    """Regular tetrahedron (4 vertices, 6 edges, 4 faces)."""
    v = np.array(
        [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
    )
    f = _oriented(v, [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)])
    return Mesh.from_arrays(v, f)


def octahedron() -> Mesh:
    """Regular octahedron (6 vertices, 12 edges, 8 faces)."""
    v = np.array(
        [
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ]
    )
    f = _oriented(
        v,
        [
            (0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
            (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5),
        ],
    )
    return Mesh.from_arrays(v, f)


def icosahedron() -> Mesh:
    """Regular icosahedron (12 vertices, 30 edges, 20 faces), unit radius."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    v /= np.linalg.norm(v[0])
    f = _oriented(
        v,
        [
            (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
            (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
            (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
            (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
        ],
    )
    return Mesh.from_arrays(v, f)


def icosphere(subdivisions: int = 1) -> Mesh:
    """Icosahedron refined by midpoint subdivision, projected to the unit sphere.

    Each level splits every triangle into four, so level 1 has 80 faces /
    120 edges and level 2 has 320 faces / 480 edges.
    """
    if subdivisions < 0:
        raise ValueError("subdivisions must be non-negative")
    base = icosahedron()
    verts = [tuple(p) for p in base.vertices]
    faces = [tuple(int(x) for x in tri) for tri in base.faces]
    for _ in range(subdivisions):
        midpoint: dict[tuple[int, int], int] = {}

        def mid(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            m = midpoint.get(key)
            if m is None:
                p = np.array(verts[a]) + np.array(verts[b])
                p /= np.linalg.norm(p)
                m = len(verts)
                verts.append(tuple(p))
                midpoint[key] = m
            return m

        next_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            next_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = next_faces

    v = np.array(verts, dtype=np.float64)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return Mesh.from_arrays(v, np.array(faces, dtype=np.int64))


def square_patch() -> Mesh:
    """Unit square split into two triangles by the diagonal (0, 2).

    The diagonal is the only interior edge, which makes this the smallest
    useful fixture for edge flipping and boundary-handling tests.
    """
    v = np.array(
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]]
    )
    f = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    return Mesh.from_arrays(v, f)
