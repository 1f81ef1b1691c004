"""Cluster-aware local remeshing: valence flips, energy-improving flips and
collapses, and pressure-driven vertex translation.

Edge flips and collapses keep the cluster centroids fixed and only accept
operations that strictly lower the summed distance of the affected faces to
their nearest centroid.  Vertex translation pushes every edge toward the
rank-matched edge length of its faces' centroids; each endpoint takes half
of the correction and a vertex moves to the mean of the targets from its
incident edges.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .mesh import HalfedgeMesh
from .metric import ClusterState, embed_faces, update_aggregates

_logger = logging.getLogger(__name__)

_AREA_EPS = 1e-12


@dataclass
class RemeshConfig:
    displacement_band: float = 0.25
    flip_valence_target: int = 6
    shape_check_samples: int = 1
    collapse_enabled: bool = True
    energy_guard: bool = True
    max_backtracks: int = 12
    step_scale: float = 1.0
    surface_anchor: bool = False

    def validate(self) -> None:
        if not 0 < self.displacement_band <= 1:
            raise ConfigError("displacement_band must lie in (0, 1]")
        if self.max_backtracks < 0:
            raise ConfigError("max_backtracks must be >= 0")
        if self.step_scale <= 0:
            raise ConfigError("step_scale must be > 0")


@dataclass
class EdgePressure:
    """Length correction of one edge and the resulting endpoint targets."""

    edge: int
    required_length: float
    delta: float
    targets: tuple[np.ndarray, np.ndarray]


# ----------------------------------------------------------------------
# small geometric helpers


def _sorted_lengths(p: np.ndarray, a: int, b: int, c: int) -> np.ndarray:
    pa, pb, pc = p[a], p[b], p[c]
    return np.sort([np.linalg.norm(pb - pa), np.linalg.norm(pc - pb), np.linalg.norm(pa - pc)])


def _normal(p: np.ndarray, a: int, b: int, c: int) -> np.ndarray:
    return np.cross(p[b] - p[a], p[c] - p[a])


def _nearest(point: np.ndarray, centroids: np.ndarray) -> tuple[int, float]:
    diff = centroids - point
    d = np.einsum("kd,kd->k", diff, diff)
    j = int(np.argmin(d))
    return j, float(d[j])


def _area_floor(mesh: HalfedgeMesh) -> float:
    diag = mesh.bounding_box().diagonal
    return 2.0 * _AREA_EPS * diag * diag


def _flip_geometry_ok(mesh: HalfedgeMesh, h: int, floor: float) -> bool:
    """Reject flips that create slivers or fold the two faces over each other."""
    t = mesh.he_twin[h]
    p = mesh.positions
    u, v = mesh.he_origin[h], mesh.he_origin[t]
    a = mesh.he_origin[mesh.prev(h)]
    b = mesh.he_origin[mesh.prev(t)]
    n_old = _normal(p, u, v, a) + _normal(p, v, u, b)
    n0 = _normal(p, a, b, v)
    n1 = _normal(p, b, a, u)
    if np.linalg.norm(n0) <= floor or np.linalg.norm(n1) <= floor:
        return False
    return n0 @ n_old > 0 and n1 @ n_old > 0 and n0 @ n1 > 0


# ----------------------------------------------------------------------
# valence optimization


def optimize_valence(mesh: HalfedgeMesh, target: int = 6, max_passes: int = 10) -> int:
    """Flip edges that strictly reduce the squared valence deviation.

    Returns the number of flips applied.
    """
    floor = _area_floor(mesh)
    total = 0
    for _ in range(max_passes):
        flips = 0
        for h in list(mesh.edge_halfedges()):
            t = mesh.he_twin[h]
            u, v = mesh.he_origin[h], mesh.he_origin[t]
            a = mesh.he_origin[mesh.prev(h)]
            b = mesh.he_origin[mesh.prev(t)]
            vu, vv, va, vb = (mesh.valence(x) for x in (u, v, a, b))
            before = (vu - target) ** 2 + (vv - target) ** 2 + (va - target) ** 2 + (vb - target) ** 2
            after = ((vu - 1 - target) ** 2 + (vv - 1 - target) ** 2
                     + (va + 1 - target) ** 2 + (vb + 1 - target) ** 2)
            if after < before and mesh.can_flip(h) and _flip_geometry_ok(mesh, h, floor):
                mesh.flip(h)
                flips += 1
        total += flips
        if flips == 0:
            break
    _logger.debug("valence optimization: %d flips", total)
    return total


# ----------------------------------------------------------------------
# clustering-aware flips and collapses


def _face_index_of_slots(mesh: HalfedgeMesh) -> np.ndarray:
    """Row in faces() for every face slot (-1 for tombstones)."""
    idx = -np.ones(len(mesh.face_he), dtype=np.int64)
    live = mesh.live_faces()
    idx[live] = np.arange(len(live))
    return idx


def improve_by_flip(mesh: HalfedgeMesh, state: ClusterState) -> tuple[HalfedgeMesh, ClusterState]:
    """One pass over all edges, flipping where the two faces get closer to
    their (re-assigned) nearest centroids.  Updates ``state`` in place.
    """
    if len(mesh.face_he) != mesh.n_faces:
        raise ValueError("improve_by_flip needs a compacted mesh")
    floor = _area_floor(mesh)
    p = mesh.positions
    C = state.centroids
    d = state.per_triangle_distance
    labels = state.labels
    flips = 0
    for h in list(mesh.edge_halfedges()):
        t = mesh.he_twin[h]
        f0, f1 = mesh.he_face[h], mesh.he_face[t]
        u, v = mesh.he_origin[h], mesh.he_origin[t]
        a = mesh.he_origin[mesh.prev(h)]
        b = mesh.he_origin[mesh.prev(t)]
        if a == b:
            continue
        before = d[f0] + d[f1]
        l0, d0 = _nearest(_sorted_lengths(p, a, b, v), C)
        l1, d1 = _nearest(_sorted_lengths(p, b, a, u), C)
        if d0 + d1 < before and mesh.can_flip(h) and _flip_geometry_ok(mesh, h, floor):
            mesh.flip(h)
            labels[f0], d[f0] = l0, d0
            labels[f1], d[f1] = l1, d1
            flips += 1
    update_aggregates(state)
    _logger.debug("clustering flips: %d", flips)
    return mesh, state


def _collapse_geometry_ok(mesh: HalfedgeMesh, h: int, pos: np.ndarray, floor: float) -> bool:
    t = mesh.he_twin[h]
    u, v = mesh.he_origin[h], mesh.he_origin[t]
    removed = {mesh.he_face[h], mesh.he_face[t]}
    p = mesh.positions
    for w in (u, v):
        for f in mesh.vertex_faces(w):
            if f in removed:
                continue
            a, b, c = mesh.face_vertices(f)
            n_old = _normal(p, a, b, c)
            q = [pos if x in (u, v) else p[x] for x in (a, b, c)]
            n_new = np.cross(q[1] - q[0], q[2] - q[0])
            if np.linalg.norm(n_new) <= floor or n_new @ n_old <= 0:
                return False
    return True


def improve_by_collapse(mesh: HalfedgeMesh, state: ClusterState) -> tuple[HalfedgeMesh, ClusterState]:
    """One pass over all edges, collapsing to the midpoint where the local
    energy of the merged 1-ring strictly drops.  Returns a compacted mesh
    and a state re-indexed to its faces.
    """
    if len(mesh.face_he) != mesh.n_faces:
        raise ValueError("improve_by_collapse needs a compacted mesh")
    floor = _area_floor(mesh)
    C = state.centroids
    d = state.per_triangle_distance.copy()
    labels = state.labels.copy()
    collapses = 0
    for h in list(mesh.edge_halfedges()):
        if mesh.he_face[h] < 0 or not mesh.can_collapse(h):
            continue
        t = mesh.he_twin[h]
        u, v = mesh.he_origin[h], mesh.he_origin[t]
        pos = 0.5 * (mesh.positions[u] + mesh.positions[v])
        removed = {mesh.he_face[h], mesh.he_face[t]}
        ring = set(mesh.vertex_faces(u)) | set(mesh.vertex_faces(v))
        before = sum(d[f] for f in ring)
        after = 0.0
        updates = {}
        p = mesh.positions
        for f in ring - removed:
            a, b, c = mesh.face_vertices(f)
            q = [pos if x in (u, v) else p[x] for x in (a, b, c)]
            pt = np.sort([np.linalg.norm(q[1] - q[0]), np.linalg.norm(q[2] - q[1]),
                          np.linalg.norm(q[0] - q[2])])
            updates[f] = _nearest(pt, C)
            after += updates[f][1]
        if after < before and _collapse_geometry_ok(mesh, h, pos, floor):
            mesh.collapse(h, pos)
            for f, (lab, dist) in updates.items():
                labels[f], d[f] = lab, dist
            for f in removed:
                d[f] = 0.0
            collapses += 1
    if collapses:
        live = mesh.live_faces()
        mesh.compact()
        labels, d = labels[live], d[live]
    state.labels = labels
    state.per_triangle_distance = d
    update_aggregates(state)
    _logger.debug("clustering collapses: %d", collapses)
    return mesh, state


# ----------------------------------------------------------------------
# pressure-driven translation


def required_lengths(mesh: HalfedgeMesh, state: ClusterState) -> np.ndarray:
    """Per-edge required length: the centroid component matching the edge's
    rank inside each incident face, averaged over the two faces.
    """
    faces = mesh.faces()
    _, ranks = embed_faces(mesh.positions, faces)
    req = state.centroids[state.labels[:, None], ranks]
    fe = mesh.face_edge_ids()
    out = np.zeros(mesh.n_edges)
    np.add.at(out, fe.ravel(), req.ravel())
    return out / 2.0


def edge_pressures(mesh: HalfedgeMesh, state: ClusterState) -> list[EdgePressure]:
    """Per-edge pressure records (diagnostic view of :func:`pressure_targets`)."""
    e = mesh.edges()
    req = required_lengths(mesh, state)
    p = mesh.positions
    out = []
    for i, (a, b) in enumerate(e):
        vec = p[b] - p[a]
        length = np.linalg.norm(vec)
        delta = req[i] - length
        u = vec / length
        out.append(EdgePressure(i, float(req[i]), float(delta),
                                (p[a] - 0.5 * delta * u, p[b] + 0.5 * delta * u)))
    return out


def pressure_targets(positions: np.ndarray, edges: np.ndarray, required: np.ndarray) -> np.ndarray:
    """Mean of the per-edge endpoint targets around every vertex."""
    pa, pb = positions[edges[:, 0]], positions[edges[:, 1]]
    vec = pb - pa
    length = np.linalg.norm(vec, axis=1, keepdims=True)
    half = 0.5 * (required[:, None] - length) * vec / length
    acc = np.zeros_like(positions)
    np.add.at(acc, edges[:, 0], pa - half)
    np.add.at(acc, edges[:, 1], pb + half)
    count = np.bincount(edges.ravel(), minlength=len(positions)).astype(np.float64)
    out = positions.copy()
    nz = count > 0
    out[nz] = acc[nz] / count[nz, None]
    return out


def _inverted_faces(old: np.ndarray, new: np.ndarray, faces: np.ndarray, floor: float) -> np.ndarray:
    def normals(p):
        tri = p[faces]
        return np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    n0, n1 = normals(old), normals(new)
    return (np.einsum("ij,ij->i", n0, n1) <= 0) | (np.linalg.norm(n1, axis=1) <= floor)


def fixed_label_energy(positions, faces, state: ClusterState) -> float:
    points, _ = embed_faces(positions, faces)
    diff = points - state.centroids[state.labels]
    return float(np.einsum("nd,nd->", diff, diff))


def translate_vertices(mesh: HalfedgeMesh, state: ClusterState,
                       cfg: RemeshConfig | None = None, *, mean_edge: float | None = None,
                       reference=None, surface_radius: float | None = None) -> HalfedgeMesh:
    """Move every vertex toward the mean of its edge-pressure targets.

    A candidate is accepted when it lies within ``displacement_band *
    mean_edge`` of the current position and, if a ``reference`` surface
    (a :class:`~isokit.spatial.TriangleIndex`) is given, within
    ``surface_radius`` of that surface.  Otherwise the midpoint between the
    candidate and the current position is tried once; if that also fails the
    vertex stays.  Moves that would invert an incident face are dropped.
    With the energy guard on, the whole step is halved until the fixed-label
    energy does not increase.
    """
    cfg = cfg or RemeshConfig()
    faces = mesh.faces()
    edges = mesh.edges()
    old = mesh.positions
    if mean_edge is None:
        mean_edge = mesh.mean_edge_length()
    radius = cfg.displacement_band * mean_edge
    if reference is not None and surface_radius is None:
        surface_radius = radius

    def outside(cand, idx):
        bad = np.linalg.norm(cand - old[idx], axis=1) > radius
        if reference is not None and len(idx):
            bad |= reference.distance(cand) > surface_radius
        return bad

    target = pressure_targets(old, edges, required_lengths(mesh, state))
    step = cfg.step_scale * (target - old)
    moving = np.flatnonzero(np.any(step != 0.0, axis=1))
    far = outside(old[moving] + step[moving], moving)
    idx = moving[far]
    step[idx] *= 0.5
    step[idx[outside(old[idx] + step[idx], idx)]] = 0.0

    floor = _area_floor(mesh)
    new = old + step
    for _ in range(len(old)):
        bad = _inverted_faces(old, new, faces, floor)
        if not bad.any():
            break
        verts = np.unique(faces[bad])
        step[verts] = 0.0
        new = old + step

    if cfg.energy_guard:
        e0 = fixed_label_energy(old, faces, state)
        scale = 1.0
        for attempt in range(cfg.max_backtracks + 1):
            cand = old + scale * step
            ok = True
            if attempt:
                moved = np.flatnonzero(np.any(step != 0.0, axis=1))
                ok = not outside(cand[moved], moved).any() and \
                    not _inverted_faces(old, cand, faces, floor).any()
            if ok and fixed_label_energy(cand, faces, state) <= e0:
                new = cand
                break
            scale *= 0.5
        else:
            new = old.copy()
    mesh.positions = new
    return mesh
