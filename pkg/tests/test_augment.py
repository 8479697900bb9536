import numpy as np
import pytest

from meshcl import shapes
from meshcl.augment import (
    SCALE_RANGE,
    AugmentationPolicy,
    anisotropic_scale,
    augment,
    flip_edges,
    jitter_policy,
    shift_vertices,
)
from meshcl.mesh import Mesh, validate_mesh


def _dart():
    """Two triangles over a concave (dart-shaped) quad.

    The shared edge is the only valid diagonal: flipping it would put the new
    diagonal outside the quad, so a legal flipper must always refuse.
    """
    vertices = np.array(
        [
            [0.0, 0.3, 0.0],  # reflex corner
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0],
        ]
    )
    faces = np.array([[0, 1, 2], [0, 2, 3]])
    return Mesh.from_arrays(vertices, faces)


class TestPolicy:
    def test_validation(self):
        with pytest.raises(ValueError):
            AugmentationPolicy(scale_sigma=-0.1)
        with pytest.raises(ValueError):
            AugmentationPolicy(shift_probability=1.5)
        with pytest.raises(ValueError):
            AugmentationPolicy(flip_probability=-0.01)

    def test_jitter_scales_knobs_within_bounds(self):
        policy = AugmentationPolicy(
            scale_sigma=0.1, shift_probability=0.2, flip_probability=0.05, seed=3
        )
        for epoch in range(50):
            jittered = jitter_policy(policy, epoch)
            assert 0.8 * 0.1 <= jittered.scale_sigma <= 1.2 * 0.1
            assert 0.8 * 0.2 <= jittered.shift_probability <= 1.2 * 0.2
            assert 0.8 * 0.05 <= jittered.flip_probability <= 1.2 * 0.05

    def test_jitter_deterministic_per_epoch(self):
        policy = AugmentationPolicy(seed=9)
        a = jitter_policy(policy, 4)
        b = jitter_policy(policy, 4)
        assert (a.scale_sigma, a.shift_probability) == (b.scale_sigma, b.shift_probability)
        c = jitter_policy(policy, 5)
        assert a.scale_sigma != c.scale_sigma

    def test_jitter_disabled_returns_policy(self):
        policy = AugmentationPolicy(jitter=False, seed=1)
        assert jitter_policy(policy, 7) is policy

    def test_jitter_caps_probabilities_at_one(self):
        policy = AugmentationPolicy(shift_probability=1.0, flip_probability=1.0)
        for epoch in range(20):
            jittered = jitter_policy(policy, epoch)
            assert jittered.shift_probability <= 1.0
            assert jittered.flip_probability <= 1.0


class TestScale:
    def test_sigma_zero_is_identity(self, sphere1, rng):
        out = anisotropic_scale(sphere1, rng, 0.0)
        np.testing.assert_array_equal(out.vertices, sphere1.vertices)
        assert out.faces is sphere1.faces

    def test_deterministic(self, sphere1):
        a = anisotropic_scale(sphere1, np.random.default_rng(5), 0.1)
        b = anisotropic_scale(sphere1, np.random.default_rng(5), 0.1)
        np.testing.assert_array_equal(a.vertices, b.vertices)

    def test_factors_clamped(self, tetra):
        lo, hi = SCALE_RANGE
        for trial in range(50):
            out = anisotropic_scale(tetra, np.random.default_rng(trial), 10.0)
            factors = out.vertices[0] / tetra.vertices[0]
            assert np.all(factors >= lo - 1e-12)
            assert np.all(factors <= hi + 1e-12)

    def test_factor_statistics(self, tetra):
        # With sigma = 0.1 the clamp almost never binds, so the sampled
        # factors should look like N(1, 0.1^2).
        rng = np.random.default_rng(0)
        factors = np.array(
            [anisotropic_scale(tetra, rng, 0.1).vertices[0] / tetra.vertices[0]
             for _ in range(500)]
        ).ravel()
        assert abs(factors.mean() - 1.0) < 0.02
        assert abs(factors.std() - 0.1) < 0.02

    def test_per_axis_independence(self, tetra):
        out = anisotropic_scale(tetra, np.random.default_rng(2), 0.3)
        factors = out.vertices[0] / tetra.vertices[0]
        assert len(set(np.round(factors, 12))) == 3


class TestShift:
    def test_probability_zero_is_identity(self, sphere1, rng):
        out = shift_vertices(sphere1, rng, 0.0)
        np.testing.assert_array_equal(out.vertices, sphere1.vertices)

    def test_first_vertex_moves_onto_a_neighbor_segment(self, sphere1):
        # Vertex 0 is processed first, so its target neighbor still sits at
        # an original position; the move must land on a segment toward one.
        out = shift_vertices(sphere1, np.random.default_rng(0), 1.0)
        v0, v0_new = sphere1.vertices[0], out.vertices[0]
        delta = v0_new - v0
        assert np.linalg.norm(delta) > 0.0
        hits = 0
        for n in sphere1.vertex_neighbors()[0]:
            seg = sphere1.vertices[n] - v0
            t = float(np.dot(delta, seg) / np.dot(seg, seg))
            if 0.0 < t <= 0.5 and np.linalg.norm(delta - t * seg) < 1e-12:
                hits += 1
        assert hits == 1

    def test_probability_one_moves_vertices(self, sphere1):
        out = shift_vertices(sphere1, np.random.default_rng(3), 1.0)
        moved = np.linalg.norm(out.vertices - sphere1.vertices, axis=1) > 0.0
        # all moves on a round mesh pass the area guard
        assert moved.all()

    def test_area_guard_blocks_squashing_moves(self, sphere1, monkeypatch):
        # An impossible guard threshold must freeze every vertex even at
        # selection probability 1.
        import importlib

        monkeypatch.setattr(
            importlib.import_module("meshcl.augment"), "AREA_GUARD", 10.0
        )
        out = shift_vertices(sphere1, np.random.default_rng(3), 1.0)
        np.testing.assert_array_equal(out.vertices, sphere1.vertices)

    def test_topology_untouched(self, sphere1):
        out = shift_vertices(sphere1, np.random.default_rng(1), 0.7)
        assert out.faces is sphere1.faces
        assert out.edges is sphere1.edges


class TestFlip:
    def test_probability_zero_is_identity(self, sphere1, rng):
        out = flip_edges(sphere1, rng, 0.0)
        np.testing.assert_array_equal(out.faces, sphere1.faces)

    def test_square_diagonal_flips(self, square):
        out = flip_edges(square, np.random.default_rng(0), 1.0)
        pairs = {tuple(e) for e in out.edges.tolist()}
        assert (1, 3) in pairs
        assert (0, 2) not in pairs
        tris = sorted(sorted(tri) for tri in out.faces.tolist())
        assert tris == [[0, 1, 3], [1, 2, 3]]
        # vertex positions are reused byte-identically
        assert out.vertices is square.vertices

    def test_flip_preserves_counts_and_validity(self, square):
        out = flip_edges(square, np.random.default_rng(0), 1.0)
        assert out.vertex_count == square.vertex_count
        assert out.edge_count == square.edge_count
        assert out.face_count == square.face_count
        assert validate_mesh(out).ok

    def test_existing_diagonal_blocks_flip(self, tetra):
        # On a tetrahedron every opposite-vertex pair is already an edge, so
        # no flip is ever legal.
        out = flip_edges(tetra, np.random.default_rng(0), 1.0)
        np.testing.assert_array_equal(out.faces, tetra.faces)

    def test_concave_quad_blocks_flip(self):
        dart = _dart()
        out = flip_edges(dart, np.random.default_rng(0), 1.0)
        np.testing.assert_array_equal(out.faces, dart.faces)

    def test_boundary_edges_never_flip(self, square):
        # With only the diagonal flippable, 100 trials never touch the
        # boundary edges.
        for trial in range(100):
            out = flip_edges(square, np.random.default_rng(trial), 1.0)
            boundary_pairs = {tuple(e) for e in square.edges[square.boundary].tolist()}
            out_pairs = {tuple(e) for e in out.edges.tolist()}
            assert boundary_pairs <= out_pairs

    def test_flipped_sphere_remains_closed(self, sphere1):
        out = flip_edges(sphere1, np.random.default_rng(4), 0.3)
        assert validate_mesh(out).ok
        assert out.is_closed
        assert out.euler_characteristic == 2
        assert (out.faces != sphere1.faces).any()


class TestCompose:
    def test_all_zero_policy_is_identity(self, sphere1):
        policy = AugmentationPolicy(
            scale_sigma=0.0, shift_probability=0.0, flip_probability=0.0
        )
        out = augment(sphere1, policy)
        np.testing.assert_array_equal(out.vertices, sphere1.vertices)
        np.testing.assert_array_equal(out.faces, sphere1.faces)

    def test_deterministic_given_policy_seed(self, sphere1):
        policy = AugmentationPolicy(seed=11)
        a = augment(sphere1, policy)
        b = augment(sphere1, policy)
        np.testing.assert_array_equal(a.vertices, b.vertices)
        np.testing.assert_array_equal(a.faces, b.faces)

    def test_explicit_rng_overrides_policy_seed(self, sphere1):
        policy = AugmentationPolicy(seed=11)
        a = augment(sphere1, policy, np.random.default_rng(0))
        b = augment(sphere1, policy, np.random.default_rng(1))
        assert (a.vertices != b.vertices).any()

    def test_counts_and_validity_hold(self, sphere1):
        policy = AugmentationPolicy()
        for trial in range(20):
            out = augment(sphere1, policy, np.random.default_rng(trial))
            assert out.vertex_count == sphere1.vertex_count
            assert out.edge_count == sphere1.edge_count
            assert out.face_count == sphere1.face_count
            assert validate_mesh(out).ok

    def test_new_mesh_identity(self, sphere1):
        out = augment(sphere1, AugmentationPolicy(seed=2))
        assert out.uid != sphere1.uid
