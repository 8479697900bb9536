import numpy as np
import pytest

from meshcl import shapes
from meshcl.features import (
    FEATURE_NAMES,
    STD_FLOOR,
    ChannelStats,
    extract_features,
    features_to_csv,
    fit_channel_stats,
    standardize_features,
)
from meshcl.mesh import Mesh


def _random_rotation(rng):
    # QR of a Gaussian matrix gives a uniformly random orthogonal matrix;
    # force a proper rotation by fixing the determinant sign.
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _random_mesh(rng, subdivisions=1):
    base = shapes.icosphere(subdivisions)
    radial = 1.0 + 0.15 * rng.standard_normal(base.vertex_count)
    return Mesh.from_arrays(base.vertices * radial[:, None], base.faces)


class TestKnownValues:
    def test_regular_tetrahedron(self, tetra):
        feats = extract_features(tetra)
        assert feats.shape == (6, 5)
        # dihedral angle of the regular tetrahedron
        np.testing.assert_allclose(feats[:, 0], np.arccos(1.0 / 3.0), atol=1e-12)
        # equilateral triangles: opposite angles are 60 degrees
        np.testing.assert_allclose(feats[:, 1:3], np.pi / 3.0, atol=1e-12)
        # edge-length-to-height ratio of an equilateral triangle
        np.testing.assert_allclose(feats[:, 3:5], 2.0 / np.sqrt(3.0), atol=1e-12)

    def test_octahedron_dihedral(self, octa):
        feats = extract_features(octa)
        np.testing.assert_allclose(feats[:, 0], np.arccos(-1.0 / 3.0), atol=1e-12)

    def test_icosahedron_dihedral(self, ico):
        feats = extract_features(ico)
        np.testing.assert_allclose(
            feats[:, 0], np.arccos(-np.sqrt(5.0) / 3.0), atol=1e-12
        )

    def test_flat_pair_has_pi_dihedral(self):
        vertices = np.array(
            [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]
        )
        mesh = Mesh.from_arrays(vertices, np.array([[0, 1, 2], [1, 3, 2]]))
        feats = extract_features(mesh)
        interior = ~mesh.boundary
        np.testing.assert_allclose(feats[interior, 0], np.pi, atol=1e-12)

    def test_feature_names_match_width(self, tetra):
        assert len(FEATURE_NAMES) == extract_features(tetra).shape[1]


class TestConventions:
    def test_pairs_sorted_ascending(self, rng):
        for trial in range(10):
            mesh = _random_mesh(np.random.default_rng(trial))
            feats = extract_features(mesh)
            assert np.all(feats[:, 1] <= feats[:, 2])
            assert np.all(feats[:, 3] <= feats[:, 4])

    def test_boundary_edges_duplicate_their_single_face(self, square):
        feats = extract_features(square)
        for e in np.flatnonzero(square.boundary):
            assert feats[e, 0] == np.pi
            np.testing.assert_allclose(feats[e, 1], feats[e, 2], atol=1e-12)
            np.testing.assert_allclose(feats[e, 3], feats[e, 4], atol=1e-12)

    def test_square_patch_diagonal(self, square):
        feats = extract_features(square)
        e = int(np.flatnonzero(~square.boundary)[0])
        # both opposite corners of the unit square are right angles
        np.testing.assert_allclose(feats[e, 1:3], np.pi / 2.0, atol=1e-12)
        # |diagonal|^2 / (2 * area of half-square) = 2 / 1 = 2
        np.testing.assert_allclose(feats[e, 3:5], 2.0, atol=1e-12)

    def test_all_features_finite_on_random_meshes(self):
        for trial in range(5):
            feats = extract_features(_random_mesh(np.random.default_rng(100 + trial)))
            assert np.all(np.isfinite(feats))
            assert np.all(feats[:, 0] >= 0.0) and np.all(feats[:, 0] <= np.pi)


class TestSimilarityInvariance:
    def test_rotation_translation_uniform_scale(self):
        # 20 random meshes x 5 random similarity transforms each: features
        # must agree to 1e-9 with the untransformed mesh.
        for trial in range(20):
            rng = np.random.default_rng(1000 + trial)
            mesh = _random_mesh(rng)
            base = extract_features(mesh)
            for _ in range(5):
                rot = _random_rotation(rng)
                scale = float(rng.uniform(0.1, 10.0))
                shift = rng.uniform(-5.0, 5.0, size=3)
                moved = Mesh.from_arrays(
                    scale * mesh.vertices @ rot.T + shift, mesh.faces
                )
                np.testing.assert_allclose(
                    extract_features(moved), base, rtol=0.0, atol=1e-9
                )

    def test_anisotropic_scaling_changes_features(self, rng):
        mesh = _random_mesh(rng)
        base = extract_features(mesh)
        squeezed = Mesh.from_arrays(
            mesh.vertices * np.array([1.0, 1.0, 0.3]), mesh.faces
        )
        assert np.max(np.abs(extract_features(squeezed) - base)) > 1e-3


class TestStandardization:
    def test_moments_after_standardizing(self, rng):
        feats = extract_features(_random_mesh(rng))
        standardized, stats = standardize_features(feats)
        np.testing.assert_allclose(standardized.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(standardized.std(axis=0), 1.0, atol=1e-12)
        assert isinstance(stats, ChannelStats)

    def test_reuse_of_fitted_stats(self, rng):
        a = extract_features(_random_mesh(np.random.default_rng(1)))
        b = extract_features(_random_mesh(np.random.default_rng(2)))
        stats = fit_channel_stats(a)
        out, returned = standardize_features(b, stats)
        assert returned is stats
        np.testing.assert_allclose(out, (b - stats.mean) / stats.std, atol=1e-15)

    def test_constant_channel_does_not_blow_up(self):
        feats = np.ones((10, 5))
        stats = fit_channel_stats(feats)
        assert np.all(stats.std >= STD_FLOOR)
        out, _ = standardize_features(feats, stats)
        assert np.all(np.isfinite(out))
        np.testing.assert_allclose(out, 0.0, atol=1e-12)

    def test_stats_shapes_validated(self):
        with pytest.raises(ValueError):
            fit_channel_stats(np.ones((0, 5)))


class TestCsv:
    def test_header_and_rows(self, tetra):
        feats = extract_features(tetra)
        text = features_to_csv(feats)
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(FEATURE_NAMES)
        assert len(lines) == 1 + tetra.edge_count
        # row t describes edge t; repr round-trips doubles exactly
        parsed = np.array(
            [[float(v) for v in line.split(",")] for line in lines[1:]]
        )
        np.testing.assert_array_equal(parsed, feats)
