"""Vertex-budget simplification followed by Lloyd relaxation on the input surface.

The budget is reached by shortest-edge collapse.  Each collapse merges an
edge into its midpoint projected back onto the input, so every vertex stays
on the reference surface.  Lloyd steps then move each vertex to the centroid
of its barycentric cell and reproject it.  Delaunay flips between steps keep
the connectivity matched to the relaxed positions.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, ConfigError
from .mesh import HalfedgeMesh
from .remeshing import _area_floor, _collapse_geometry_ok, _flip_geometry_ok
from .spatial import TriangleIndex

_logger = logging.getLogger(__name__)

MIN_VERTICES = 12
_MAX_BISECTIONS = 8


@dataclass
class SimplifyConfig:
    target_vertex_count: int
    lloyd_iterations: int = 35
    projection_samples: int = 25
    delaunay_flips: bool = True
    allow_small: bool = False

    def validate(self) -> None:
        if self.lloyd_iterations < 1:
            raise ConfigError("lloyd_iterations must be >= 1")
        if self.projection_samples < 0:
            raise ConfigError("projection_samples must be >= 0")
        if self.target_vertex_count < 4:
            raise BudgetError("no closed triangulation has fewer than 4 vertices")
        if self.target_vertex_count < MIN_VERTICES and not self.allow_small:
            raise BudgetError(f"target_vertex_count must be >= {MIN_VERTICES} "
                              "(set allow_small for coarser approximations)")


def _reference(ref) -> TriangleIndex:
    return ref if isinstance(ref, TriangleIndex) else TriangleIndex.from_mesh(ref)


def decimate(mesh: HalfedgeMesh, target: int, reference: TriangleIndex | None = None) -> HalfedgeMesh:
    """Collapse shortest legal edges until ``target`` vertices remain.

    Works on a copy and returns a compacted mesh.  Raises BudgetError when
    no legal collapse is left before the budget is met.
    """
    ref = reference or TriangleIndex.from_mesh(mesh)
    m = mesh.copy()
    floor = _area_floor(m)
    p = m.positions

    heap = []

    def push(h):
        u, v = m.he_origin[h], m.target(h)
        heapq.heappush(heap, (float(np.linalg.norm(p[u] - p[v])), min(u, v), max(u, v)))

    for h in m.edge_halfedges():
        push(h)

    n = m.n_vertices
    while n > target:
        if not heap:
            raise BudgetError(f"stuck at {n} vertices; no legal collapse toward {target}")
        length, u, v = heapq.heappop(heap)
        if m.vert_he[u] < 0 or m.vert_he[v] < 0:
            continue
        h = m.find_halfedge(u, v)
        if h < 0 or abs(np.linalg.norm(p[u] - p[v]) - length) > 1e-15 * max(length, 1.0):
            continue
        if not m.can_collapse(h):
            continue
        pos = ref.closest(0.5 * (p[u] + p[v]))[0][0]
        if not _collapse_geometry_ok(m, h, pos, floor):
            continue
        kept = m.collapse(h, pos)
        n -= 1
        for g in m.outgoing(kept):
            push(g)
    m.compact()
    return m


def delaunay_flips(mesh: HalfedgeMesh, max_passes: int = 10) -> int:
    """Flip edges whose opposite angles sum above pi.  Returns the flip count."""
    floor = _area_floor(mesh)
    p = mesh.positions
    total = 0

    def angle(at, x, y):
        e1, e2 = p[x] - p[at], p[y] - p[at]
        return np.arctan2(np.linalg.norm(np.cross(e1, e2)), e1 @ e2)

    for _ in range(max_passes):
        flips = 0
        for h in list(mesh.edge_halfedges()):
            t = mesh.he_twin[h]
            u, v = mesh.he_origin[h], mesh.he_origin[t]
            a = mesh.he_origin[mesh.prev(h)]
            b = mesh.he_origin[mesh.prev(t)]
            if angle(a, u, v) + angle(b, u, v) > np.pi + 1e-9 and mesh.can_flip(h) \
                    and _flip_geometry_ok(mesh, h, floor):
                mesh.flip(h)
                flips += 1
        total += flips
        if flips == 0:
            break
    return total


def _cell_centroids(positions: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Area-weighted centroid of every vertex's barycentric cell.

    The cell of corner i inside a triangle is the quad (p_i, edge midpoints,
    triangle centroid); its centroid is (22 p_i + 7 p_j + 7 p_k) / 36 and
    its area a third of the triangle's.
    """
    tri = positions[faces]
    area = 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    acc = np.zeros_like(positions)
    w = np.zeros(len(positions))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        c = (22.0 * tri[:, i] + 7.0 * tri[:, j] + 7.0 * tri[:, k]) / 36.0
        np.add.at(acc, faces[:, i], area[:, None] * c)
        np.add.at(w, faces[:, i], area)
    out = positions.copy()
    ok = w > 0
    out[ok] = acc[ok] / w[ok, None]
    return out


def _face_normals(positions, faces):
    tri = positions[faces]
    return np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])


def lloyd_relax_step(mesh: HalfedgeMesh, samples) -> HalfedgeMesh:
    """Move every vertex to its cell centroid, reprojected onto ``samples``.

    ``samples`` is the reference surface, a mesh or a prebuilt
    :class:`TriangleIndex`.  Vertices whose move would flip an incident face
    are pulled back toward their old position by bisection; after
    ``_MAX_BISECTIONS`` halvings they stay put.  Mutates and returns ``mesh``.
    """
    ref = _reference(samples)
    faces = mesh.faces()
    old = mesh.positions.copy()
    n_old = _face_normals(old, faces)
    floor = _area_floor(mesh)
    target = ref.closest(_cell_centroids(old, faces))[0]

    frac = np.ones(len(old))
    new = target.copy()
    for _ in range(_MAX_BISECTIONS + 1):
        n_new = _face_normals(new, faces)
        bad_f = (np.einsum("ij,ij->i", n_new, n_old) <= 0) | (np.linalg.norm(n_new, axis=1) <= floor)
        if not bad_f.any():
            break
        bad_v = np.unique(faces[bad_f])
        frac[bad_v] *= 0.5
        mid = old[bad_v] + frac[bad_v, None] * (target[bad_v] - old[bad_v])
        new[bad_v] = ref.closest(mid)[0]
    else:
        n_new = _face_normals(new, faces)
        bad_f = (np.einsum("ij,ij->i", n_new, n_old) <= 0) | (np.linalg.norm(n_new, axis=1) <= floor)
        while bad_f.any():
            bad_v = np.unique(faces[bad_f])
            new[bad_v] = old[bad_v]
            n_new = _face_normals(new, faces)
            bad_f = (np.einsum("ij,ij->i", n_new, n_old) <= 0) | (np.linalg.norm(n_new, axis=1) <= floor)
    mesh.positions = new
    mesh._touch()
    return mesh


def edge_length_cv(mesh: HalfedgeMesh) -> float:
    """Coefficient of variation of the edge lengths."""
    e = mesh.edge_lengths()
    return float(e.std() / e.mean())


def min_angles(mesh: HalfedgeMesh) -> np.ndarray:
    """Smallest interior angle of every face, in radians."""
    tri = mesh.positions[mesh.faces()]
    out = np.full(len(tri), np.pi)
    for i in range(3):
        e1 = tri[:, (i + 1) % 3] - tri[:, i]
        e2 = tri[:, (i + 2) % 3] - tri[:, i]
        ang = np.arctan2(np.linalg.norm(np.cross(e1, e2), axis=1), np.einsum("ij,ij->i", e1, e2))
        out = np.minimum(out, ang)
    return out


def simplify(mesh: HalfedgeMesh, cfg: SimplifyConfig) -> HalfedgeMesh:
    """Decimate ``mesh`` to the vertex budget, then relax with Lloyd steps.

    The input is not modified.  Every output vertex lies on the input surface.
    """
    cfg.validate()
    if cfg.target_vertex_count > mesh.n_vertices:
        raise BudgetError(f"target {cfg.target_vertex_count} exceeds input vertex count "
                          f"{mesh.n_vertices}")
    ref = TriangleIndex.from_mesh(mesh)
    out = decimate(mesh, cfg.target_vertex_count, ref)
    _logger.info("decimated %d -> %d vertices", mesh.n_vertices, out.n_vertices)
    for _ in range(cfg.lloyd_iterations):
        if cfg.delaunay_flips:
            delaunay_flips(out, max_passes=2)
        lloyd_relax_step(out, ref)
    _logger.info("relaxed: edge-length CV %.4f, min angle %.2f deg", edge_length_cv(out),
                 np.degrees(min_angles(out).min()))
    return out
