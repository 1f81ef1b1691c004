"""Index-based halfedge triangle mesh.

Halfedges, faces and vertices are addressed by integer ids stored in plain
lists, which keeps snapshots cheap (``copy()``) and makes local topology
edits (flip, collapse) O(valence).  Removed elements are tombstoned with
``-1`` until :meth:`HalfedgeMesh.compact` renumbers everything.

A halfedge ``h`` stores its origin vertex, its twin, the next halfedge in
its face and the face itself.  The target of ``h`` is ``origin[twin[h]]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, TopologyError

_logger = logging.getLogger(__name__)

DEGENERATE_AREA_FACTOR = 1e-12


@dataclass(frozen=True)
class BoundingBox:
    min_corner: np.ndarray
    max_corner: np.ndarray

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.max_corner - self.min_corner))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min_corner + self.max_corner)


class HalfedgeMesh:
    """Closed, oriented 2-manifold triangle mesh.

    Parameters
    ----------
    positions : array_like, shape (V, 3)
        Vertex coordinates.
    faces : array_like, shape (F, 3)
        Counter-clockwise vertex triples, 0-based.
    validate : bool
        Reject open, non-manifold, non-orientable or degenerate input.

    Raises
    ------
    TopologyError
        If ``validate`` is set and the input is not a closed manifold.
    """

    def __init__(self, positions, faces, *, validate: bool = True):
        self.positions = np.array(positions, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        nv = len(self.positions)
        if faces.size and (faces.min() < 0 or faces.max() >= nv):
            raise TopologyError("face references a vertex out of range")

        self.he_origin: list[int] = []
        self.he_twin: list[int] = []
        self.he_next: list[int] = []
        self.he_face: list[int] = []
        self.face_he: list[int] = []
        self.vert_he: list[int] = [-1] * nv
        self._topo_version = 0
        self._cache: dict = {}

        directed: dict[tuple[int, int], int] = {}
        for f, (a, b, c) in enumerate(faces.tolist()):
            if a == b or b == c or c == a:
                raise TopologyError(f"face {f} repeats a vertex")
            base = len(self.he_origin)
            for i, (u, v) in enumerate(((a, b), (b, c), (c, a))):
                if (u, v) in directed:
                    raise TopologyError(
                        f"directed edge ({u}, {v}) used twice: non-manifold "
                        "edge or inconsistent orientation")
                directed[(u, v)] = base + i
                self.he_origin.append(u)
                self.he_twin.append(-1)
                self.he_next.append(base + (i + 1) % 3)
                self.he_face.append(f)
                self.vert_he[u] = base + i
            self.face_he.append(base)

        for (u, v), h in directed.items():
            t = directed.get((v, u))
            if t is None:
                if validate:
                    raise TopologyError(f"boundary edge ({u}, {v}): mesh is not closed")
                continue
            self.he_twin[h] = t

        if validate:
            if any(h < 0 for h in self.vert_he):
                raise TopologyError("mesh has unreferenced vertices")
            self._check_vertex_manifold()
            self._check_degenerate()

    # ------------------------------------------------------------------
    # construction helpers

    @classmethod
    def from_arrays(cls, positions, faces) -> "HalfedgeMesh":
        """Build a mesh, dropping vertices that no face references."""
        positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        used = np.unique(faces)
        if len(used) != len(positions):
            remap = -np.ones(len(positions), dtype=np.int64)
            remap[used] = np.arange(len(used))
            positions = positions[used]
            faces = remap[faces]
        return cls(positions, faces)

    def _check_vertex_manifold(self) -> None:
        out_count = [0] * len(self.vert_he)
        for h, o in enumerate(self.he_origin):
            out_count[o] += 1
        for v, h0 in enumerate(self.vert_he):
            n = 0
            h = h0
            while True:
                n += 1
                h = self.he_next[self.he_twin[h]]
                if h == h0 or n > out_count[v]:
                    break
            if n != out_count[v]:
                raise TopologyError(f"vertex {v} is non-manifold (multiple fans)")

    def _check_degenerate(self) -> None:
        if not self.face_he:
            raise TopologyError("mesh has no faces")
        diag = self.bounding_box().diagonal
        areas = self.face_areas()
        bad = np.flatnonzero(areas <= DEGENERATE_AREA_FACTOR * diag * diag)
        if len(bad):
            raise TopologyError(f"{len(bad)} degenerate face(s), first {bad[0]}")

    def copy(self) -> "HalfedgeMesh":
        other = object.__new__(HalfedgeMesh)
        other.positions = self.positions.copy()
        other.he_origin = list(self.he_origin)
        other.he_twin = list(self.he_twin)
        other.he_next = list(self.he_next)
        other.he_face = list(self.he_face)
        other.face_he = list(self.face_he)
        other.vert_he = list(self.vert_he)
        other._topo_version = 0
        other._cache = {}
        return other

    # ------------------------------------------------------------------
    # counts and element access

    def _touch(self) -> None:
        self._topo_version += 1
        self._cache.clear()

    @property
    def n_vertices(self) -> int:
        return sum(1 for h in self.vert_he if h >= 0)

    @property
    def n_faces(self) -> int:
        return sum(1 for h in self.face_he if h >= 0)

    @property
    def n_edges(self) -> int:
        return len(self.edge_halfedges())

    @property
    def n_halfedges(self) -> int:
        return sum(1 for f in self.he_face if f >= 0)

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    def target(self, h: int) -> int:
        return self.he_origin[self.he_twin[h]]

    def prev(self, h: int) -> int:
        return self.he_next[self.he_next[h]]

    def live_vertices(self) -> list[int]:
        return [v for v, h in enumerate(self.vert_he) if h >= 0]

    def live_faces(self) -> list[int]:
        return [f for f, h in enumerate(self.face_he) if h >= 0]

    def edge_halfedges(self) -> list[int]:
        """One representative halfedge per undirected edge, ascending id."""
        key = "edge_he"
        if key not in self._cache:
            self._cache[key] = [h for h, t in enumerate(self.he_twin)
                                if self.he_face[h] >= 0 and h < t]
        return self._cache[key]

    def faces(self) -> np.ndarray:
        """(F, 3) vertex ids of live faces, in face id order."""
        key = "faces"
        if key not in self._cache:
            rows = []
            for h in self.face_he:
                if h < 0:
                    continue
                h1 = self.he_next[h]
                rows.append((self.he_origin[h], self.he_origin[h1],
                             self.he_origin[self.he_next[h1]]))
            self._cache[key] = np.array(rows, dtype=np.int64).reshape(-1, 3)
        return self._cache[key]

    def edges(self) -> np.ndarray:
        """(E, 2) vertex ids per undirected edge, aligned with edge_halfedges()."""
        key = "edges"
        if key not in self._cache:
            hs = self.edge_halfedges()
            self._cache[key] = np.array(
                [(self.he_origin[h], self.target(h)) for h in hs],
                dtype=np.int64).reshape(-1, 2)
        return self._cache[key]

    def face_edge_ids(self) -> np.ndarray:
        """(F, 3) edge index (row of :meth:`edges`) of local edges v0v1, v1v2, v2v0."""
        key = "face_edges"
        if key not in self._cache:
            index = {h: i for i, h in enumerate(self.edge_halfedges())}
            rows = []
            for h0 in self.face_he:
                if h0 < 0:
                    continue
                row = []
                h = h0
                for _ in range(3):
                    row.append(index[min(h, self.he_twin[h])])
                    h = self.he_next[h]
                rows.append(row)
            self._cache[key] = np.array(rows, dtype=np.int64).reshape(-1, 3)
        return self._cache[key]

    def face_halfedges(self, f: int) -> tuple[int, int, int]:
        h0 = self.face_he[f]
        h1 = self.he_next[h0]
        return h0, h1, self.he_next[h1]

    def face_vertices(self, f: int) -> tuple[int, int, int]:
        return tuple(self.he_origin[h] for h in self.face_halfedges(f))

    def outgoing(self, v: int):
        h0 = self.vert_he[v]
        h = h0
        while True:
            yield h
            h = self.he_next[self.he_twin[h]]
            if h == h0:
                return

    def neighbors(self, v: int) -> list[int]:
        return [self.target(h) for h in self.outgoing(v)]

    def vertex_faces(self, v: int) -> list[int]:
        return [self.he_face[h] for h in self.outgoing(v)]

    def valence(self, v: int) -> int:
        return sum(1 for _ in self.outgoing(v))

    def valences(self) -> np.ndarray:
        val = np.zeros(len(self.vert_he), dtype=np.int64)
        e = self.edges()
        np.add.at(val, e.ravel(), 1)
        return val

    def find_halfedge(self, u: int, v: int) -> int:
        for h in self.outgoing(u):
            if self.target(h) == v:
                return h
        return -1

    # ------------------------------------------------------------------
    # geometry

    def face_normals(self, unit: bool = True) -> np.ndarray:
        """Per-face normals; with ``unit=False`` the length is twice the area."""
        tri = self.positions[self.faces()]
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        if not unit:
            return n
        length = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, length, out=np.zeros_like(n), where=length > 0)

    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_normals(unit=False), axis=1)

    def face_centroids(self) -> np.ndarray:
        return self.positions[self.faces()].mean(axis=1)

    def vertex_normal(self, v: int) -> np.ndarray:
        """Mean of the unit normals of the faces around ``v``, renormalized.

        Raises
        ------
        DegenerateError
            If every incident face has zero area.
        """
        acc = np.zeros(3)
        ok = False
        p = self.positions
        for h in self.outgoing(v):
            a, b, c = self.face_vertices(self.he_face[h])
            n = np.cross(p[b] - p[a], p[c] - p[a])
            length = np.linalg.norm(n)
            if length > 0:
                acc += n / length
                ok = True
        norm = np.linalg.norm(acc)
        if not ok or norm == 0:
            raise DegenerateError(f"vertex {v} has no non-degenerate incident face")
        return acc / norm

    def vertex_normals(self) -> np.ndarray:
        """Vectorized :meth:`vertex_normal` for every vertex slot."""
        fn = self.face_normals()
        acc = np.zeros_like(self.positions)
        f = self.faces()
        for i in range(3):
            np.add.at(acc, f[:, i], fn)
        length = np.linalg.norm(acc, axis=1, keepdims=True)
        return np.divide(acc, length, out=np.zeros_like(acc), where=length > 0)

    def edge_lengths(self) -> np.ndarray:
        e = self.edges()
        return np.linalg.norm(self.positions[e[:, 0]] - self.positions[e[:, 1]], axis=1)

    def mean_edge_length(self) -> float:
        return float(self.edge_lengths().mean())

    def bounding_box(self) -> BoundingBox:
        p = self.positions[self.live_vertices()]
        return BoundingBox(p.min(axis=0), p.max(axis=0))

    def volume(self) -> float:
        tri = self.positions[self.faces()]
        return float(np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)

    # ------------------------------------------------------------------
    # audit

    def audit(self) -> None:
        """Walk every live element and assert the structural invariants."""
        for h, f in enumerate(self.he_face):
            if f < 0:
                continue
            t = self.he_twin[h]
            if t < 0 or self.he_face[t] < 0 or self.he_twin[t] != h:
                raise TopologyError(f"halfedge {h}: twin involution broken")
            if self.he_origin[t] == self.he_origin[h]:
                raise TopologyError(f"halfedge {h}: twin has same origin")
            n3 = self.he_next[self.he_next[self.he_next[h]]]
            if n3 != h:
                raise TopologyError(f"halfedge {h}: face is not a 3-cycle")
            if self.he_face[self.he_next[h]] != f:
                raise TopologyError(f"halfedge {h}: next leaves the face")
            if self.he_origin[self.he_next[h]] != self.target(h):
                raise TopologyError(f"halfedge {h}: next does not start at target")
        for f, h in enumerate(self.face_he):
            if h >= 0 and self.he_face[h] != f:
                raise TopologyError(f"face {f}: halfedge points elsewhere")
        for v, h in enumerate(self.vert_he):
            if h >= 0 and (self.he_face[h] < 0 or self.he_origin[h] != v):
                raise TopologyError(f"vertex {v}: outgoing halfedge invalid")
        seen = set()
        for v in self.live_vertices():
            fan = set(self.outgoing(v))
            seen |= fan
        live_he = {h for h, f in enumerate(self.he_face) if f >= 0}
        if seen != live_he:
            raise TopologyError("vertex fans do not cover all halfedges (non-manifold)")

    # ------------------------------------------------------------------
    # local topology edits

    def can_flip(self, h: int) -> bool:
        t = self.he_twin[h]
        a = self.he_origin[self.prev(h)]
        b = self.he_origin[self.prev(t)]
        if a == b:
            return False
        u, v = self.he_origin[h], self.he_origin[t]
        if self.valence(u) <= 3 or self.valence(v) <= 3:
            return False
        return self.find_halfedge(a, b) < 0

    def flip(self, h: int) -> None:
        """Rotate edge ``h`` inside its two faces (caller checks legality)."""
        t = self.he_twin[h]
        h1, h2 = self.he_next[h], self.prev(h)
        t1, t2 = self.he_next[t], self.prev(t)
        f0, f1 = self.he_face[h], self.he_face[t]
        u, v = self.he_origin[h], self.he_origin[t]
        a, b = self.he_origin[h2], self.he_origin[t2]

        self.he_origin[h] = a
        self.he_origin[t] = b
        self.he_next[h], self.he_next[t2], self.he_next[h1] = t2, h1, h
        self.he_next[t], self.he_next[h2], self.he_next[t1] = h2, t1, t
        self.he_face[t2] = f0
        self.he_face[h2] = f1
        self.face_he[f0] = h
        self.face_he[f1] = t
        self.vert_he[u] = t1
        self.vert_he[v] = h1
        self._touch()

    def can_collapse(self, h: int) -> bool:
        """Link condition plus valence guard for collapsing ``h`` onto its target."""
        t = self.he_twin[h]
        u, v = self.he_origin[h], self.he_origin[t]
        a = self.he_origin[self.prev(h)]
        b = self.he_origin[self.prev(t)]
        if self.n_vertices <= 4:
            return False
        nu = set(self.neighbors(u))
        nv = set(self.neighbors(v))
        if nu & nv != {a, b}:
            return False
        if self.valence(a) <= 3 or self.valence(b) <= 3:
            return False
        # resulting valence of the kept vertex
        if len(nu) + len(nv) - 4 < 3:
            return False
        return True

    def collapse(self, h: int, position=None) -> int:
        """Merge the origin of ``h`` into its target; returns the kept vertex.

        Faces and halfedges are tombstoned; call :meth:`compact` afterwards
        to renumber.
        """
        t = self.he_twin[h]
        h1, h2 = self.he_next[h], self.prev(h)
        t1, t2 = self.he_next[t], self.prev(t)
        u, v = self.he_origin[h], self.he_origin[t]
        a, b = self.he_origin[h2], self.he_origin[t2]
        o1, o2 = self.he_twin[h1], self.he_twin[h2]
        o3, o4 = self.he_twin[t1], self.he_twin[t2]

        for g in list(self.outgoing(u)):
            self.he_origin[g] = v

        self.he_twin[o1], self.he_twin[o2] = o2, o1
        self.he_twin[o3], self.he_twin[o4] = o4, o3
        for f in (self.he_face[h], self.he_face[t]):
            self.face_he[f] = -1
        for g in (h, h1, h2, t, t1, t2):
            self.he_face[g] = -1
            self.he_next[g] = -1
            self.he_twin[g] = -1
            self.he_origin[g] = -1
        self.vert_he[u] = -1
        self.vert_he[v] = o2
        self.vert_he[a] = o1
        self.vert_he[b] = o3
        if position is not None:
            self.positions[v] = position
        self._touch()
        return v

    def compact(self) -> np.ndarray:
        """Drop tombstoned elements; returns the old-to-new vertex map (-1 = removed)."""
        vmap = -np.ones(len(self.vert_he), dtype=np.int64)
        live_v = [v for v, h in enumerate(self.vert_he) if h >= 0]
        vmap[live_v] = np.arange(len(live_v))
        live_h = [h for h, f in enumerate(self.he_face) if f >= 0]
        hmap = {h: i for i, h in enumerate(live_h)}
        live_f = [f for f, h in enumerate(self.face_he) if h >= 0]
        fmap = {f: i for i, f in enumerate(live_f)}

        self.positions = self.positions[live_v]
        self.he_origin = [int(vmap[self.he_origin[h]]) for h in live_h]
        self.he_twin = [hmap[self.he_twin[h]] for h in live_h]
        self.he_next = [hmap[self.he_next[h]] for h in live_h]
        self.he_face = [fmap[self.he_face[h]] for h in live_h]
        self.face_he = [hmap[self.face_he[f]] for f in live_f]
        self.vert_he = [hmap[self.vert_he[v]] for v in live_v]
        self._touch()
        return vmap

    def __repr__(self) -> str:
        return f"HalfedgeMesh(V={self.n_vertices}, F={self.n_faces})"


def mean_edge_length(mesh: HalfedgeMesh) -> float:
    return mesh.mean_edge_length()


def bounding_box(mesh: HalfedgeMesh) -> BoundingBox:
    return mesh.bounding_box()


def valence(mesh: HalfedgeMesh, v: int) -> int:
    return mesh.valence(v)


def vertex_normal(mesh: HalfedgeMesh, v: int) -> np.ndarray:
    return mesh.vertex_normal(v)
