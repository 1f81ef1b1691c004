"""Small helpers for building and checking closed triangle solids."""

from __future__ import annotations

from collections import deque

import numpy as np
import shapely
from scipy.spatial import cKDTree
from shapely.geometry import Polygon

from .errors import TopologyError
from .mesh import HalfedgeMesh


def orient_faces(faces: np.ndarray) -> np.ndarray:
    """Flip faces so that every shared edge is traversed in opposite directions.

    Works per connected component by breadth-first search.  Raises
    TopologyError if the surface is not orientable.
    """
    faces = np.array(faces, dtype=np.int64)
    edge_faces: dict = {}
    for f, tri in enumerate(faces):
        for i in range(3):
            u, v = int(tri[i]), int(tri[(i + 1) % 3])
            edge_faces.setdefault((min(u, v), max(u, v)), []).append(f)
    seen = np.zeros(len(faces), dtype=bool)

    def directed(f):
        t = faces[f]
        return {(int(t[i]), int(t[(i + 1) % 3])) for i in range(3)}

    for start in range(len(faces)):
        if seen[start]:
            continue
        seen[start] = True
        queue = deque([start])
        while queue:
            f = queue.popleft()
            mine = directed(f)
            for u, v in mine:
                for g in edge_faces[(min(u, v), max(u, v))]:
                    if g == f:
                        continue
                    same = (u, v) in directed(g)
                    if seen[g]:
                        if same:
                            raise TopologyError("surface is not orientable")
                        continue
                    if same:
                        faces[g] = faces[g][::-1]
                    seen[g] = True
                    queue.append(g)
    return faces


def signed_volume(positions: np.ndarray, faces: np.ndarray) -> float:
    tri = positions[faces]
    return float(np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)


def outward(positions: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Consistently oriented faces with positive enclosed volume."""
    faces = orient_faces(faces)
    if signed_volume(positions, faces) < 0:
        faces = faces[:, ::-1].copy()
    return faces


def _unique_edges(faces: np.ndarray) -> np.ndarray:
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    return np.unique(np.sort(e, axis=1), axis=0)


def self_intersections(positions: np.ndarray, faces: np.ndarray, eps: float = 1e-9) -> np.ndarray:
    """Pairs (edge, face) where a mesh edge properly crosses a face that
    shares no vertex with it.  Returns an (m, 2) array of indices into the
    unique edge list and the face list.
    """
    p = np.asarray(positions, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    edges = _unique_edges(faces)
    scale = float(np.linalg.norm(p.max(axis=0) - p.min(axis=0)))
    tol = eps * scale
    ei, fi = np.meshgrid(np.arange(len(edges)), np.arange(len(faces)), indexing="ij")
    ei, fi = ei.ravel(), fi.ravel()
    e, f = edges[ei], faces[fi]
    share = (e[:, :1] == f).any(axis=1) | (e[:, 1:] == f).any(axis=1)
    ei, fi, e, f = ei[~share], fi[~share], e[~share], f[~share]

    o = p[e[:, 0]]
    d = p[e[:, 1]] - o
    v0, v1, v2 = p[f[:, 0]], p[f[:, 1]], p[f[:, 2]]
    e1, e2 = v1 - v0, v2 - v0
    pv = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, pv)
    ok = np.abs(det) > 1e-300
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tv = o - v0
    u = np.einsum("ij,ij->i", tv, pv) * inv
    qv = np.cross(tv, e1)
    v = np.einsum("ij,ij->i", d, qv) * inv
    t = np.einsum("ij,ij->i", e2, qv) * inv
    length = np.linalg.norm(d, axis=1)
    rel = tol / np.maximum(length, 1e-300)
    hit = ok & (u > 1e-9) & (v > 1e-9) & (u + v < 1 - 1e-9) & (t > rel) & (t < 1 - rel)
    return np.stack([ei[hit], fi[hit]], axis=1)


def ray_parity_inside(positions: np.ndarray, faces: np.ndarray, point, direction=(0.5773, 0.5774, 0.5775)) -> bool:
    """Odd number of ray crossings means the point is inside the solid."""
    p = np.asarray(positions, dtype=np.float64)
    o = np.asarray(point, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    tri = p[np.asarray(faces)]
    e1, e2 = tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]
    pv = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, pv)
    ok = np.abs(det) > 1e-300
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tv = o - tri[:, 0]
    u = np.einsum("ij,ij->i", tv, pv) * inv
    qv = np.cross(tv, e1)
    v = (qv @ d) * inv
    t = np.einsum("ij,ij->i", e2, qv) * inv
    hit = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > 0)
    return bool(hit.sum() % 2)


def validate_solid(positions: np.ndarray, faces: np.ndarray) -> HalfedgeMesh:
    """Check closedness, manifoldness, outward orientation and self-intersection.

    Raises
    ------
    TopologyError
        On any failed check.
    """
    mesh = HalfedgeMesh(positions, faces)
    if mesh.volume() <= 0:
        raise TopologyError("solid is not outward oriented")
    bad = self_intersections(mesh.positions, mesh.faces())
    if len(bad):
        raise TopologyError(f"solid self-intersects ({len(bad)} edge/face crossings)")
    return mesh


def triangulate_polygon(points2d: np.ndarray, shell: list, holes: list = ()) -> np.ndarray:
    """Constrained Delaunay triangulation of a polygon with holes.

    ``shell`` and each hole are lists of indices into ``points2d``.  Returns
    faces as index triples into ``points2d``; no new vertices are created.
    """
    pts = np.asarray(points2d, dtype=np.float64)
    poly = Polygon(pts[list(shell)], [pts[list(h)] for h in holes])
    tris = shapely.constrained_delaunay_triangles(poly)
    tree = cKDTree(pts)
    scale = float(np.ptp(pts, axis=0).max())
    out = []
    for g in tris.geoms:
        xy = np.asarray(g.exterior.coords)[:3]
        d, idx = tree.query(xy)
        if (d > 1e-9 * scale).any():
            raise TopologyError("triangulation introduced an unexpected vertex")
        out.append(idx)
    return np.array(out, dtype=np.int64).reshape(-1, 3)
