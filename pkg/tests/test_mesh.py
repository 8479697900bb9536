import io

import numpy as np
import pytest

from meshcl import shapes
from meshcl.mesh import (
    NO_EDGE,
    Mesh,
    MeshError,
    NonManifoldError,
    ObjFormatError,
    build_edge_topology,
    load_obj,
    save_obj,
    validate_mesh,
)


class TestTopology:
    def test_closed_solid_counts(self, ico):
        # V - E + F = 2 for a sphere-topology solid; the icosahedron's
        # counts (12, 30, 20) are textbook values.
        assert ico.vertex_count == 12
        assert ico.edge_count == 30
        assert ico.face_count == 20
        assert ico.euler_characteristic == 2
        assert ico.is_closed

    def test_edge_enumeration_order(self):
        # Edges are numbered by first appearance scanning faces in order and,
        # within a face, sides (v0,v1), (v1,v2), (v2,v0).
        vertices = np.array(
            [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]
        )
        faces = np.array([[0, 1, 2], [1, 3, 2]])
        mesh = Mesh.from_arrays(vertices, faces)
        expected = np.array([[0, 1], [1, 2], [0, 2], [1, 3], [2, 3]])
        np.testing.assert_array_equal(mesh.edges, expected)

    def test_ring_slots_from_incident_faces(self, square):
        # The diagonal of the square patch is its only interior edge; its ring
        # must name the other two sides of each incident triangle, first
        # face's pair first.
        interior = np.flatnonzero(~square.boundary)
        assert interior.shape == (1,)
        e = int(interior[0])
        ring = square.edge_ring[e]
        assert NO_EDGE not in ring
        fa, fb = square.edge_faces[e]
        sides_a = {x for x in _face_edges(square, fa) if x != e}
        sides_b = {x for x in _face_edges(square, fb) if x != e}
        assert set(ring[:2]) == sides_a
        assert set(ring[2:]) == sides_b

    def test_boundary_edges_use_sentinel(self, square):
        for e in np.flatnonzero(square.boundary):
            ring = square.edge_ring[e]
            assert tuple(ring[2:]) == (NO_EDGE, NO_EDGE)
            assert NO_EDGE not in ring[:2]

    def test_ring_reciprocity(self, sphere1):
        # On a closed mesh, if b appears in a's ring they share a face, so a
        # appears in b's ring too.
        ring = sphere1.edge_ring
        for a in range(sphere1.edge_count):
            for b in ring[a]:
                assert a in ring[b]

    def test_nonmanifold_rejected_when_strict(self):
        vertices = np.zeros((5, 3))
        vertices[:4, 0] = np.arange(4)
        vertices[4, 1] = 1.0
        faces = np.array([[0, 1, 2], [0, 2, 3], [0, 4, 2]])  # (0,2) in 3 faces
        with pytest.raises(NonManifoldError):
            Mesh.from_arrays(vertices, faces)
        lenient = Mesh.from_arrays(vertices, faces, strict=False)
        assert not validate_mesh(lenient).ok

    def test_degenerate_face_rejected_when_strict(self):
        vertices = np.eye(3)
        faces = np.array([[0, 1, 1]])
        with pytest.raises(MeshError):
            Mesh.from_arrays(vertices, faces)

    def test_explicit_edge_order_is_kept(self, tetra):
        perm = np.array([3, 0, 5, 1, 4, 2])
        edges = tetra.edges[perm]
        rebuilt = Mesh.from_arrays(tetra.vertices, tetra.faces, edges=edges)
        np.testing.assert_array_equal(rebuilt.edges, edges)
        _, _, ring, _ = build_edge_topology(
            tetra.faces, tetra.vertex_count, edges=edges
        )
        np.testing.assert_array_equal(rebuilt.edge_ring, ring)

    def test_vertex_neighbors(self, tetra):
        nbr = tetra.vertex_neighbors()
        for v in range(4):
            assert nbr[v] == [x for x in range(4) if x != v]

    def test_arrays_are_read_only(self, ico):
        with pytest.raises(ValueError):
            ico.vertices[0, 0] = 9.0
        with pytest.raises(ValueError):
            ico.faces[0, 0] = 9

    def test_uids_distinguish_instances(self, tetra):
        again = Mesh.from_arrays(tetra.vertices, tetra.faces)
        assert again.uid != tetra.uid


def _face_edges(mesh, f):
    tri = mesh.faces[f]
    pairs = [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])]
    lookup = {(min(a, b), max(a, b)): i for i, (a, b) in enumerate(map(tuple, mesh.edges))}
    return [lookup[(min(int(a), int(b)), max(int(a), int(b)))] for a, b in pairs]


class TestGeometry:
    def test_edge_lengths(self, tetra):
        # Every edge of this tetrahedron spans two sign flips of coordinates
        # in {-1, 1}^3, so all lengths are 2 * sqrt(2).
        np.testing.assert_allclose(tetra.edge_lengths(), 2.0 * np.sqrt(2.0))

    def test_face_areas(self, tetra):
        side = 2.0 * np.sqrt(2.0)
        expected = np.sqrt(3.0) / 4.0 * side**2
        np.testing.assert_allclose(tetra.face_areas(), expected)

    def test_euler_ignores_orphan_vertices(self, tetra):
        padded = np.vstack([tetra.vertices, [[9.0, 9.0, 9.0]]])
        mesh = Mesh.from_arrays(padded, tetra.faces)
        assert mesh.euler_characteristic == 2


class TestValidation:
    def test_clean_mesh_passes(self, sphere1):
        report = validate_mesh(sphere1)
        assert report.ok
        assert str(report) == "ok"

    def test_duplicate_face_detected(self, tetra):
        faces = np.vstack([tetra.faces, tetra.faces[0][::-1]])
        mesh = Mesh.from_arrays(tetra.vertices, faces, strict=False)
        report = validate_mesh(mesh)
        codes = {i.code for i in report.issues}
        assert "duplicate-face" in codes
        # the duplicated side pairs also become over-shared edges
        assert "nonmanifold-edge" in codes

    def test_repeated_vertex_detected(self):
        vertices = np.eye(3)
        faces = np.array([[0, 1, 2], [0, 1, 1]])
        mesh = Mesh.from_arrays(vertices, faces, strict=False)
        codes = [i.code for i in validate_mesh(mesh).issues]
        assert "face-repeated-vertex" in codes

    def test_zero_area_face_detected(self):
        vertices = np.array(
            [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5, 0.5, 0.0]]
        )
        vertices[3] = vertices[0] + 1e-15 * (vertices[1] - vertices[0])
        faces = np.array([[0, 1, 2], [0, 1, 3]])
        mesh = Mesh.from_arrays(vertices, faces, strict=False)
        codes = [i.code for i in validate_mesh(mesh).issues]
        assert "zero-area-face" in codes
        report = validate_mesh(mesh)
        assert not report.ok
        assert "zero-area-face" in str(report)


class TestObjIO:
    def test_round_trip_geometry(self, sphere1, rng):
        noisy = Mesh.from_arrays(
            sphere1.vertices + 0.01 * rng.standard_normal(sphere1.vertices.shape),
            sphere1.faces,
        )
        back = load_obj(save_obj(noisy))
        np.testing.assert_allclose(back.vertices, noisy.vertices, atol=5e-10)
        np.testing.assert_array_equal(back.faces, noisy.faces)
        np.testing.assert_array_equal(back.edges, noisy.edges)

    def test_reads_comments_and_blanks(self):
        text = "\n".join(
            [
                "# a comment",
                "",
                "v 0 0 0",
                "v 1 0 0",
                "v 0 1 0",
                "f 1 2 3",
            ]
        )
        mesh = load_obj(text)
        assert mesh.face_count == 1

    def test_reads_slash_syntax_and_negative_indices(self):
        text = "\n".join(
            [
                "v 0 0 0",
                "v 1 0 0",
                "v 0 1 0",
                "f -3/1 -2/2 -1/3",
            ]
        )
        mesh = load_obj(text)
        np.testing.assert_array_equal(mesh.faces, [[0, 1, 2]])

    def test_accepts_file_object(self, tetra):
        mesh = load_obj(io.StringIO(save_obj(tetra)))
        np.testing.assert_array_equal(mesh.faces, tetra.faces)

    def test_error_carries_line_number(self):
        with pytest.raises(ObjFormatError) as info:
            load_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2\n")
        assert info.value.line_no == 4
        with pytest.raises(ObjFormatError) as info:
            load_obj("v 0 0 x\n")
        assert info.value.line_no == 1

    def test_index_out_of_range(self):
        with pytest.raises(ObjFormatError):
            load_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n")

    def test_no_faces_is_an_error(self):
        with pytest.raises(ObjFormatError):
            load_obj("v 0 0 0\n")
        with pytest.raises(ObjFormatError):
            load_obj("")

    def test_quad_face_rejected(self):
        text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
        with pytest.raises(ObjFormatError):
            load_obj(text)

    def test_faceless_mesh_rejected_at_construction(self, tetra):
        with pytest.raises(MeshError):
            Mesh.from_arrays(tetra.vertices, np.zeros((0, 3), dtype=np.int64))

    def test_loader_is_lenient_about_nonmanifold(self):
        # Files in the wild may be non-manifold; the loader defers judgment
        # to validate_mesh instead of refusing to read.
        text = "\n".join(
            [
                "v 0 0 0",
                "v 1 0 0",
                "v 0 1 0",
                "v 0 0 1",
                "v 1 1 1",
                "f 1 2 3",
                "f 1 3 4",
                "f 1 5 3",
            ]
        )
        mesh = load_obj(text)
        assert not validate_mesh(mesh).ok
