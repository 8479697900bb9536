"""Feature-driven edge-collapse pooling and its exact inverse bookkeeping.

Pooling repeatedly collapses the live edge with the smallest feature L2 norm
(ties: lowest id).  One collapse removes the edge's two incident triangles,
merges each triangle's remaining edge pair into one edge (feature = the
elementwise mean of the pair), and fuses the edge's endpoints at their
midpoint — a net loss of exactly three edges.  Every collapse is logged in a
:class:`CollapseRecord`, which is enough to

* route gradients through pooling exactly (each merged feature is a mean, the
  collapsed center edge simply drops out), and
* un-pool: copy each coarse edge's feature back onto all the original edges
  of its merge group.

A collapse is legal only when the edge and its four ring edges are interior,
both endpoints are interior vertices, the endpoints share exactly two
neighbor vertices (the two opposite ones), and fusing would not create a
duplicate face.  The queue is lazy: stale norms are skipped, illegal edges are
retried after the next rebuild, and pooling fails loudly if no legal collapse
remains.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .mesh import Mesh, MeshError


@dataclass(frozen=True)
class CollapseEvent:
    """One edge collapse.

    Attributes:
        removed: id of the collapsed (center) edge.
        merges: two ``(kept, dropped)`` id pairs, one per incident triangle;
            the lower id of each pair survives.
        vertex_merge: ``(kept vertex, removed vertex)`` — the removed vertex's
            edges and faces are renamed to the kept one, which moves to the
            pair's midpoint.
        edges_before: live edge count just before this collapse.
    """

    removed: int
    merges: tuple[tuple[int, int], tuple[int, int]]
    vertex_merge: tuple[int, int]
    edges_before: int


@dataclass(frozen=True)
class CollapseRecord:
    """Everything needed to reverse a pooling pass on edge id level."""

    source_ref: int
    pooled_ref: int
    source_edges: int
    events: tuple[CollapseEvent, ...]
    kept: np.ndarray  # ascending original edge ids that survived

    def surviving_ids(self) -> np.ndarray:
        """Recompute the surviving edge ids from the event log alone."""
        alive = np.ones(self.source_edges, dtype=bool)
        for ev in self.events:
            alive[ev.removed] = False
            for _, dropped in ev.merges:
                alive[dropped] = False
        return np.flatnonzero(alive)

    def replay(self, source_mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
        """Replay the event log against ``source_mesh``.

        Returns:
            ``(kept_ids, pairs)`` — the surviving original edge ids and the
            vertex pairs they should carry in the pooled mesh, with vertices
            compacted exactly as :func:`mesh_pool` compacts them.
        """
        kept_ids = self.surviving_ids()
        rep = np.arange(source_mesh.vertex_count)
        for ev in self.events:
            kept_v, gone_v = ev.vertex_merge
            rep[gone_v] = kept_v

        def resolve(v: int) -> int:
            while rep[v] != v:
                v = rep[v]
            return v

        pairs = np.array(
            [
                sorted((resolve(int(a)), resolve(int(b))))
                for a, b in source_mesh.edges[kept_ids]
            ],
            dtype=np.int64,
        )
        used = np.unique(pairs)
        rank = {int(v): i for i, v in enumerate(used)}
        remapped = np.array(
            [(rank[int(a)], rank[int(b)]) for a, b in pairs], dtype=np.int64
        )
        return kept_ids, remapped


class _PoolState:
    """Mutable topology scratchpad for one pooling pass."""

    def __init__(self, mesh: Mesh, features: np.ndarray):
        self.verts = mesh.vertices.copy()
        self.face_v = mesh.faces.copy()
        self.face_alive = np.ones(mesh.face_count, dtype=bool)
        self.edge_v = mesh.edges.copy()
        self.edge_alive = np.ones(mesh.edge_count, dtype=bool)
        self.pair_to_edge: dict[tuple[int, int], int] = {
            (int(a), int(b)): t for t, (a, b) in enumerate(mesh.edges)
        }
        self.edge_faces: list[set[int]] = [set(fs) for fs in mesh.edge_faces]
        self.v2e: list[set[int]] = [set() for _ in range(mesh.vertex_count)]
        for t, (a, b) in enumerate(mesh.edges):
            self.v2e[int(a)].add(t)
            self.v2e[int(b)].add(t)
        self.boundary_vertex: set[int] = set()
        for t in np.flatnonzero(mesh.boundary):
            self.boundary_vertex.update(int(v) for v in mesh.edges[t])
        self.feat = features.copy()
        self.norms = np.linalg.norm(self.feat, axis=0)
        self.live = mesh.edge_count

    def pair(self, a: int, b: int) -> int | None:
        return self.pair_to_edge.get((a, b) if a < b else (b, a))

    def face_edge_ids(self, f: int) -> list[int]:
        w0, w1, w2 = (int(v) for v in self.face_v[f])
        return [self.pair(w0, w1), self.pair(w1, w2), self.pair(w2, w0)]

    def neighbors(self, v: int) -> set[int]:
        out = set()
        for t in self.v2e[v]:
            a, b = self.edge_v[t]
            out.add(int(b) if int(a) == v else int(a))
        return out

    def check_legal(self, e: int):
        """Return collapse ingredients ``(u, v, fa, fb, p, q)`` or None."""
        if len(self.edge_faces[e]) != 2:
            return None
        a, b = (int(x) for x in self.edge_v[e])
        u, v = (a, b) if a < b else (b, a)
        if u in self.boundary_vertex or v in self.boundary_vertex:
            return None
        fa, fb = sorted(self.edge_faces[e])
        third = []
        for f in (fa, fb):
            w = [int(x) for x in self.face_v[f] if int(x) != u and int(x) != v]
            if len(w) != 1:
                return None
            third.append(w[0])
        p, q = third
        if p == q:
            return None
        for f in (fa, fb):
            for t in self.face_edge_ids(f):
                if t is None or (t != e and len(self.edge_faces[t]) != 2):
                    return None
        if self.neighbors(u) & self.neighbors(v) != {p, q}:
            return None
        # fusing u and v must not create a duplicate face: the only candidates
        # are a pre-existing {u,p,q} plus {v,p,q} (guaranteed by the shared-
        # neighbor condition above)
        pq = self.pair(p, q)
        if pq is not None:
            tris = {frozenset(int(x) for x in self.face_v[f]) for f in self.edge_faces[pq]}
            if {u, p, q} in tris and {v, p, q} in tris:
                return None
        return u, v, fa, fb, p, q

    def collapse(self, e: int, u: int, v: int, fa: int, fb: int, p: int, q: int) -> CollapseEvent:
        ea_u = self.pair(u, p)
        ea_v = self.pair(v, p)
        eb_u = self.pair(u, q)
        eb_v = self.pair(v, q)
        keep_a, drop_a = (ea_u, ea_v) if ea_u < ea_v else (ea_v, ea_u)
        keep_b, drop_b = (eb_u, eb_v) if eb_u < eb_v else (eb_v, eb_u)
        event = CollapseEvent(
            removed=e,
            merges=((keep_a, drop_a), (keep_b, drop_b)),
            vertex_merge=(u, v),
            edges_before=self.live,
        )

        self.feat[:, keep_a] = 0.5 * (self.feat[:, keep_a] + self.feat[:, drop_a])
        self.feat[:, keep_b] = 0.5 * (self.feat[:, keep_b] + self.feat[:, drop_b])

        # all live faces currently touching v (fa/fb removed separately below)
        vfaces = set()
        for t in self.v2e[v]:
            vfaces |= self.edge_faces[t]
        vfaces.discard(fa)
        vfaces.discard(fb)

        for f in (fa, fb):
            self.face_alive[f] = False
            for t in self.face_edge_ids(f):
                self.edge_faces[t].discard(f)

        da_faces = set(self.edge_faces[drop_a])
        db_faces = set(self.edge_faces[drop_b])

        for t in (e, drop_a, drop_b):
            self.edge_alive[t] = False
            x, y = (int(w) for w in self.edge_v[t])
            self.v2e[x].discard(t)
            self.v2e[y].discard(t)
            del self.pair_to_edge[(x, y) if x < y else (y, x)]
            self.edge_faces[t] = set()

        for keep, opp, extra in ((keep_a, p, da_faces), (keep_b, q, db_faces)):
            x, y = (int(w) for w in self.edge_v[keep])
            self.v2e[x].discard(keep)
            self.v2e[y].discard(keep)
            del self.pair_to_edge[(x, y) if x < y else (y, x)]
            new = (u, opp) if u < opp else (opp, u)
            self.edge_v[keep] = new
            self.pair_to_edge[new] = keep
            self.v2e[u].add(keep)
            self.v2e[opp].add(keep)
            self.edge_faces[keep] |= extra

        # rename v -> u on v's remaining edges and faces
        for t in list(self.v2e[v]):
            x, y = (int(w) for w in self.edge_v[t])
            other = y if x == v else x
            del self.pair_to_edge[(x, y) if x < y else (y, x)]
            new = (u, other) if u < other else (other, u)
            self.edge_v[t] = new
            self.pair_to_edge[new] = t
            self.v2e[u].add(t)
        self.v2e[v] = set()
        for f in vfaces:
            self.face_v[f] = [u if int(w) == v else int(w) for w in self.face_v[f]]

        self.verts[u] = 0.5 * (self.verts[u] + self.verts[v])
        self.norms[keep_a] = float(np.linalg.norm(self.feat[:, keep_a]))
        self.norms[keep_b] = float(np.linalg.norm(self.feat[:, keep_b]))
        self.live -= 3
        return event


def _pool_arrays(
    features: np.ndarray, mesh: Mesh, target: int
) -> tuple[np.ndarray, Mesh, CollapseRecord]:
    """Core pooling on a raw (C, E) array; see :func:`mesh_pool`."""
    count = mesh.edge_count
    if not 0 < target <= count:
        raise ValueError(f"pool target {target} out of range for {count} edges")
    if (count - target) % 3 != 0:
        raise ValueError(
            f"cannot reach {target} edges from {count}: collapses remove 3 at a time"
        )
    if target == count:
        record = CollapseRecord(
            mesh.uid, mesh.uid, count, (), np.arange(count, dtype=np.int64)
        )
        return features.copy(), mesh, record

    st = _PoolState(mesh, features)
    heap = [(st.norms[t], t) for t in range(count)]
    heapq.heapify(heap)
    events: list[CollapseEvent] = []
    collapsed_since_rebuild = 0

    while st.live > target:
        if not heap:
            if collapsed_since_rebuild == 0:
                raise MeshError(
                    f"no legal edge collapse left with {st.live} edges "
                    f"(target {target})"
                )
            heap = [
                (st.norms[t], t) for t in np.flatnonzero(st.edge_alive)
            ]
            heapq.heapify(heap)
            collapsed_since_rebuild = 0
            continue
        norm, e = heapq.heappop(heap)
        if not st.edge_alive[e] or norm != st.norms[e]:
            continue  # stale entry
        legal = st.check_legal(e)
        if legal is None:
            continue  # retried after the next heap rebuild
        event = st.collapse(e, *legal)
        events.append(event)
        collapsed_since_rebuild += 1
        for kept, _ in event.merges:
            heapq.heappush(heap, (st.norms[kept], kept))

    kept_ids = np.flatnonzero(st.edge_alive)
    live_faces = np.flatnonzero(st.face_alive)
    used = np.unique(st.face_v[live_faces])
    rank = np.full(mesh.vertex_count, -1, dtype=np.int64)
    rank[used] = np.arange(len(used))
    pooled_mesh = Mesh.from_arrays(
        st.verts[used],
        rank[st.face_v[live_faces]],
        edges=rank[st.edge_v[kept_ids]],
        strict=True,
    )
    record = CollapseRecord(
        mesh.uid, pooled_mesh.uid, count, tuple(events), kept_ids
    )
    return st.feat[:, kept_ids].copy(), pooled_mesh, record


def _pool_backward(grad_pooled: np.ndarray, record: CollapseRecord) -> np.ndarray:
    """Gradient of :func:`_pool_arrays` output w.r.t. its input features."""
    C = grad_pooled.shape[0]
    g = np.zeros((C, record.source_edges), dtype=np.float64)
    g[:, record.kept] = grad_pooled
    for ev in reversed(record.events):
        for kept, dropped in ev.merges:
            half = 0.5 * g[:, kept]
            g[:, kept] = half
            g[:, dropped] = half
    return g


def _unpool_arrays(values: np.ndarray, record: CollapseRecord) -> np.ndarray:
    """Broadcast coarse features back to the source mesh's edges.

    Each merge group's feature lands on every original edge of the group; the
    collapsed center edge joins its event's first merge group.
    """
    C, pooled_count = values.shape
    if pooled_count != len(record.kept):
        raise ValueError(
            f"tensor has {pooled_count} edges but record kept {len(record.kept)}"
        )
    y = np.zeros((C, record.source_edges), dtype=np.float64)
    y[:, record.kept] = values
    for ev in reversed(record.events):
        (k1, d1), (k2, d2) = ev.merges
        y[:, d1] = y[:, k1]
        y[:, d2] = y[:, k2]
        y[:, ev.removed] = y[:, k1]
    return y


def _unpool_backward(grad_out: np.ndarray, record: CollapseRecord) -> np.ndarray:
    """Gradient of :func:`_unpool_arrays` w.r.t. its pooled input."""
    g = grad_out.astype(np.float64, copy=True)
    for ev in record.events:
        (k1, d1), (k2, d2) = ev.merges
        g[:, k1] += g[:, ev.removed]
        g[:, ev.removed] = 0.0
        g[:, k2] += g[:, d2]
        g[:, d2] = 0.0
        g[:, k1] += g[:, d1]
        g[:, d1] = 0.0
    return g[:, record.kept]
