"""Per-edge geometric features, invariant to similarity transforms.

Each edge gets five numbers, all built from angles and length *ratios* so that
rotating, translating, mirroring, or uniformly scaling the mesh leaves them
unchanged:

0. dihedral angle — pi minus the unsigned angle between the two incident face
   normals (a flat pair of faces therefore reads pi);
1, 2. the inner angles at the vertices opposite the edge in each incident
   triangle, sorted ascending;
3, 4. the edge length divided by the perpendicular height from the opposite
   vertex, one per incident triangle, sorted ascending.

A boundary edge has one incident triangle: its angle and ratio are duplicated
into both slots and the dihedral is pi.  Sorting the pairs makes the features
independent of face scan order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh

FEATURE_NAMES = ("dihedral", "angle_a", "angle_b", "ratio_a", "ratio_b")

#: Channels of standardized features never divide by less than this.
STD_FLOOR = 1e-8


def extract_features(mesh: Mesh) -> np.ndarray:
    """Compute the (E, 5) feature matrix for every edge of ``mesh``.

    The mesh is expected to be structurally valid (positive face areas);
    degenerate geometry yields non-finite values rather than an error.
    """
    verts = mesh.vertices
    faces = mesh.faces
    edges = mesh.edges

    p = verts[faces]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    cross_norm = np.linalg.norm(cross, axis=1)
    normals = cross / cross_norm[:, None]
    areas = 0.5 * cross_norm
    face_vert_sum = faces.sum(axis=1)

    # first / second incident face per edge (boundary edges repeat the first)
    f0 = np.array([fs[0] for fs in mesh.edge_faces], dtype=np.int64)
    f1 = np.array([fs[1] if len(fs) > 1 else fs[0] for fs in mesh.edge_faces])

    a, b = edges[:, 0], edges[:, 1]
    elen = np.linalg.norm(verts[a] - verts[b], axis=1)

    def angle_and_ratio(face_idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        opp = face_vert_sum[face_idx] - a - b
        u = verts[a] - verts[opp]
        v = verts[b] - verts[opp]
        cosang = np.einsum("ij,ij->i", u, v) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
        )
        ang = np.arccos(np.clip(cosang, -1.0, 1.0))
        # perpendicular height from opp onto the edge line: 2*area / |e|
        ratio = elen * elen / (2.0 * areas[face_idx])
        return ang, ratio

    ang0, ratio0 = angle_and_ratio(f0)
    ang1, ratio1 = angle_and_ratio(f1)

    cos_normals = np.einsum("ij,ij->i", normals[f0], normals[f1])
    dihedral = np.pi - np.arccos(np.clip(cos_normals, -1.0, 1.0))
    dihedral = np.where(mesh.boundary, np.pi, dihedral)

    out = np.empty((mesh.edge_count, 5), dtype=np.float64)
    out[:, 0] = dihedral
    out[:, 1] = np.minimum(ang0, ang1)
    out[:, 2] = np.maximum(ang0, ang1)
    out[:, 3] = np.minimum(ratio0, ratio1)
    out[:, 4] = np.maximum(ratio0, ratio1)
    return out


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel mean and standard deviation used for standardization.

    ``std`` is floored at :data:`STD_FLOOR` so constant channels map to zero
    instead of dividing by zero.
    """

    mean: np.ndarray  # (5,)
    std: np.ndarray  # (5,)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        std = np.maximum(np.asarray(self.std, dtype=np.float64).reshape(-1), STD_FLOOR)
        if mean.shape != std.shape:
            raise ValueError("mean and std must have matching shapes")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)


def fit_channel_stats(features: np.ndarray) -> ChannelStats:
    """Fit :class:`ChannelStats` on an (N, 5) stack of feature rows."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError(f"need a non-empty (N, C) matrix, got {features.shape}")
    return ChannelStats(features.mean(axis=0), features.std(axis=0))


def standardize_features(
    features: np.ndarray, stats: ChannelStats | None = None
) -> tuple[np.ndarray, ChannelStats]:
    """Shift/scale each channel to zero mean and unit variance.

    When ``stats`` is None the statistics are fit on ``features`` itself;
    otherwise the given statistics are applied unchanged (the usual case:
    statistics fit once on a training corpus and reused everywhere).

    Returns:
        ``(standardized, stats)`` — the standardized copy and the statistics
        that were applied.
    """
    features = np.asarray(features, dtype=np.float64)
    if stats is None:
        stats = fit_channel_stats(features)
    return (features - stats.mean) / stats.std, stats


def features_to_csv(features: np.ndarray) -> str:
    """Render an (E, 5) feature matrix as CSV: a header row of the five
    feature names, then one row per edge in edge-id order.

    Values are written with ``repr`` so doubles round-trip exactly.
    """
    features = np.asarray(features)
    lines = [",".join(FEATURE_NAMES)]
    for row in features:
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"
