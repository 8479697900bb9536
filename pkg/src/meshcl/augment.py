"""Stochastic mesh augmentation: anisotropic scaling, vertex shifting, edge flips.

The three operations are composed by :func:`augment` in a fixed order —
scale, then shift, then flip — drawing from one RNG stream, so a (mesh, policy,
seed) triple always yields the same augmented mesh.  Scaling and shifting move
vertices but keep the topology; flipping rewires faces but keeps the vertex
positions byte-identical.  All three preserve vertex / edge / face counts.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .mesh import Mesh
from .rng import mix_seed

#: Sampled anisotropic scale factors are clamped to this range.
SCALE_RANGE = (0.5, 1.5)
#: Vertex shifts move at most halfway toward the chosen neighbor.
SHIFT_MAX = 0.5
#: A shift is rejected if it would squash an incident face below this fraction
#: of its pre-pass area.
AREA_GUARD = 1e-6


@dataclass(frozen=True)
class AugmentationPolicy:
    """Knobs for :func:`augment`.

    ``jitter`` enables a small per-epoch rescaling of the stochastic knobs
    during pretraining (see :func:`jitter_policy`); it has no effect on a
    single :func:`augment` call.
    """

    scale_sigma: float = 0.1
    shift_probability: float = 0.2
    flip_probability: float = 0.05
    jitter: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.scale_sigma < 0:
            raise ValueError("scale_sigma must be non-negative")
        for name in ("shift_probability", "flip_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


def jitter_policy(policy: AugmentationPolicy, epoch: int) -> AugmentationPolicy:
    """Rescale the stochastic knobs by U(0.8, 1.2) factors for one epoch.

    The factors are drawn from a generator seeded with ``(policy.seed, epoch)``
    so the schedule is reproducible and independent of call order.  When the
    policy has jitter disabled it is returned unchanged.
    """
    if not policy.jitter:
        return policy
    rng = np.random.default_rng(mix_seed(policy.seed, 0xA0, epoch))
    f = rng.uniform(0.8, 1.2, size=3)
    return replace(
        policy,
        scale_sigma=policy.scale_sigma * f[0],
        shift_probability=min(1.0, policy.shift_probability * f[1]),
        flip_probability=min(1.0, policy.flip_probability * f[2]),
    )


def _with_vertices(mesh: Mesh, vertices: np.ndarray) -> Mesh:
    """New mesh with moved vertices but identical topology (no re-derivation)."""
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    vertices.setflags(write=False)
    return Mesh(
        vertices=vertices,
        faces=mesh.faces,
        edges=mesh.edges,
        edge_faces=mesh.edge_faces,
        edge_ring=mesh.edge_ring,
        boundary=mesh.boundary,
    )


def anisotropic_scale(
    mesh: Mesh, rng: np.random.Generator, sigma: float = 0.1
) -> Mesh:
    """Scale each axis by an independent factor ~ N(1, sigma^2), clamped to
    [0.5, 1.5].  With ``sigma=0`` this is an exact identity."""
    factors = np.clip(rng.normal(1.0, sigma, size=3), *SCALE_RANGE)
    return _with_vertices(mesh, mesh.vertices * factors)


def shift_vertices(
    mesh: Mesh, rng: np.random.Generator, probability: float = 0.2
) -> Mesh:
    """Move each selected vertex part of the way toward a random 1-ring neighbor.

    Each vertex is selected independently with ``probability``; a selected
    vertex v moves to ``(1 - t) v + t n`` for a uniformly chosen neighbor n and
    t ~ U(0, 0.5).  Vertices are processed in index order against the updated
    positions.  A move that would squash any incident face below ``1e-6`` of
    its pre-pass area is rejected and the vertex stays put.
    """
    pos = mesh.vertices.copy()
    neighbors = mesh.vertex_neighbors()
    vertex_faces: list[list[int]] = [[] for _ in range(mesh.vertex_count)]
    for f, tri in enumerate(mesh.faces):
        for v in tri:
            vertex_faces[int(v)].append(f)
    orig_areas = mesh.face_areas()
    faces = mesh.faces

    def area(f: int, candidate: np.ndarray, moved: int) -> float:
        tri = [candidate if int(v) == moved else pos[int(v)] for v in faces[f]]
        return 0.5 * float(np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0])))

    for v in range(mesh.vertex_count):
        if rng.random() >= probability:
            continue
        nbrs = neighbors[v]
        if not nbrs:
            continue
        n = nbrs[rng.integers(len(nbrs))]
        t = rng.uniform(0.0, SHIFT_MAX)
        candidate = (1.0 - t) * pos[v] + t * pos[n]
        ok = all(
            area(f, candidate, v) >= AREA_GUARD * orig_areas[f]
            for f in vertex_faces[v]
        )
        if ok:
            pos[v] = candidate
    return _with_vertices(mesh, pos)


def flip_edges(
    mesh: Mesh, rng: np.random.Generator, probability: float = 0.05
) -> Mesh:
    """Flip a random subset of interior edges to the opposite quad diagonal.

    Each interior edge is selected independently with ``probability`` and
    visited in edge-id order.  A selected edge (u, v) with opposite vertices
    p, q flips to (p, q) only when that keeps the mesh well-formed:

    * (p, q) is not already an edge;
    * the quad u, q, v, p is strictly convex when projected onto the plane of
      the two faces' average normal;
    * both incident faces are consistently wound.

    Illegal selections are skipped silently.  Vertex positions are reused
    byte-identically; only the face list changes.
    """
    faces = [tuple(int(v) for v in tri) for tri in mesh.faces]
    pair_faces: dict[tuple[int, int], set[int]] = {}
    for t, (a, b) in enumerate(mesh.edges):
        pair_faces[(int(a), int(b))] = set(mesh.edge_faces[t])

    verts = mesh.vertices

    def directed_in(face: tuple[int, int, int], x: int, y: int) -> bool:
        return any(
            face[k] == x and face[(k + 1) % 3] == y for k in range(3)
        )

    def face_normal(face: tuple[int, int, int]) -> np.ndarray:
        a, b, c = face
        return np.cross(verts[b] - verts[a], verts[c] - verts[a])

    for t in range(mesh.edge_count):
        if mesh.boundary[t]:
            continue
        if rng.random() >= probability:
            continue
        x, y = (int(v) for v in mesh.edges[t])
        key = (x, y)
        fids = sorted(pair_faces.get(key, ()))
        if len(fids) != 2:
            continue
        fa, fb = fids
        # orient: u -> v as traversed by face fa
        if directed_in(faces[fa], x, y):
            u, v = x, y
        elif directed_in(faces[fa], y, x):
            u, v = y, x
        else:
            continue
        if not directed_in(faces[fb], v, u):
            continue  # inconsistent winding across the edge
        p = next(w for w in faces[fa] if w != u and w != v)
        q = next(w for w in faces[fb] if w != u and w != v)
        if p == q:
            continue
        new_key = (p, q) if p < q else (q, p)
        if new_key in pair_faces:
            continue

        # strict convexity of the quad perimeter u -> q -> v -> p in 2D
        n = face_normal(faces[fa]) + face_normal(faces[fb])
        norm = np.linalg.norm(n)
        if norm < 1e-300:
            continue
        n /= norm
        axis = np.zeros(3)
        axis[int(np.argmin(np.abs(n)))] = 1.0
        t1 = np.cross(n, axis)
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(n, t1)
        cycle = np.array([verts[u], verts[q], verts[v], verts[p]])
        uv2d = np.stack([cycle @ t1, cycle @ t2], axis=1)
        d = np.roll(uv2d, -1, axis=0) - uv2d
        lengths = np.linalg.norm(d, axis=1)
        if (lengths < 1e-300).any():
            continue
        d /= lengths[:, None]
        turns = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
        if not ((turns > 1e-9).all() or (turns < -1e-9).all()):
            continue

        faces[fa] = (u, q, p)
        faces[fb] = (v, p, q)
        del pair_faces[key]
        pair_faces[new_key] = {fa, fb}
        vp = (v, p) if v < p else (p, v)
        uq = (u, q) if u < q else (q, u)
        pair_faces[vp].discard(fa)
        pair_faces[vp].add(fb)
        pair_faces[uq].discard(fb)
        pair_faces[uq].add(fa)

    return Mesh.from_arrays(mesh.vertices, np.array(faces, dtype=np.int64))


def augment(
    mesh: Mesh, policy: AugmentationPolicy, rng: np.random.Generator | None = None
) -> Mesh:
    """Apply scale, shift, and flip in order, drawing from one RNG stream.

    When ``rng`` is omitted a fresh generator seeded with ``policy.seed`` is
    used, so repeated calls with the same arguments agree exactly.
    """
    if rng is None:
        rng = np.random.default_rng(policy.seed)
    mesh = anisotropic_scale(mesh, rng, policy.scale_sigma)
    mesh = shift_vertices(mesh, rng, policy.shift_probability)
    mesh = flip_edges(mesh, rng, policy.flip_probability)
    return mesh
