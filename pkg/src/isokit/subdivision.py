"""Loop subdivision, the curved-patch descriptor w, and 4D patch classification.

Children of face f are stored at rows 4f..4f+3 (three corner children, then
the central one), so after L levels the descendants of an original face
occupy one contiguous block of 4**L rows and the central sub-triangle is
the last row of that block.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .clustering import KMeansConfig, cluster
from .errors import ConfigError, LevelError
from .mesh import HalfedgeMesh
from .metric import ClusterState, TrianglePoint, embed

_logger = logging.getLogger(__name__)


def _loop_beta(n: np.ndarray) -> np.ndarray:
    c = 3.0 / 8.0 + 0.25 * np.cos(2.0 * np.pi / n)
    return (5.0 / 8.0 - c * c) / n


def loop_step(positions: np.ndarray, faces: np.ndarray):
    """One level of Loop subdivision on arrays; returns (positions, faces)."""
    positions = np.asarray(positions, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    nv, nf = len(positions), len(faces)
    he = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    opp = np.concatenate([faces[:, 2], faces[:, 0], faces[:, 1]])
    key = np.sort(he, axis=1)
    edges, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    ne = len(edges)

    opp_sum = np.zeros((ne, 3))
    np.add.at(opp_sum, inv, positions[opp])
    edge_pts = 0.375 * (positions[edges[:, 0]] + positions[edges[:, 1]]) + 0.125 * opp_sum

    nbr_sum = np.zeros_like(positions)
    np.add.at(nbr_sum, edges[:, 0], positions[edges[:, 1]])
    np.add.at(nbr_sum, edges[:, 1], positions[edges[:, 0]])
    n = np.bincount(edges.ravel(), minlength=nv).astype(np.float64)
    beta = _loop_beta(n)
    vert_pts = (1.0 - n * beta)[:, None] * positions + beta[:, None] * nbr_sum

    e = inv.reshape(3, nf).T + nv  # edge-point ids for (v0v1, v1v2, v2v0)
    a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
    ab, bc, ca = e[:, 0], e[:, 1], e[:, 2]
    children = np.stack([
        np.stack([a, ab, ca], axis=1),
        np.stack([ab, b, bc], axis=1),
        np.stack([ca, bc, c], axis=1),
        np.stack([ab, bc, ca], axis=1),
    ], axis=1).reshape(-1, 3)
    return np.vstack([vert_pts, edge_pts]), children


def loop_subdivide(mesh: HalfedgeMesh, levels: int):
    """Apply ``levels`` rounds of Loop subdivision.

    Returns ``(mesh, patch_map)`` where ``patch_map[f]`` lists the face rows
    of the new mesh that descend from row ``f`` of ``mesh.faces()``.
    Original vertices keep their ids.
    """
    if levels < 0:
        raise ConfigError("levels must be >= 0")
    p, f = mesh.positions[mesh.live_vertices()], mesh.faces()
    if len(p) != len(mesh.vert_he):
        raise ValueError("loop_subdivide needs a compacted mesh")
    for _ in range(levels):
        p, f = loop_step(p, f)
    block = 4 ** levels
    patch_map = np.arange(len(f), dtype=np.int64).reshape(-1, block)
    return HalfedgeMesh(p, f), patch_map


@dataclass
class CurvedPatch:
    """One original face together with its subdivided descendants."""

    parent_face: int
    levels: int
    positions: np.ndarray  # positions of the whole subdivided mesh
    sub_faces: np.ndarray  # (4**levels, 3) vertex ids, central sub-triangle last
    corners: tuple  # vertex ids of the patch corners
    boundary: list
    point: TrianglePoint
    w: float = 0.0

    @property
    def w_length(self) -> float:
        return float(np.sqrt(self.w))

    @property
    def descriptor(self) -> np.ndarray:
        return np.array([self.w, *self.point])


def _boundary_loop(sub_faces: np.ndarray, start: int) -> list:
    count = {}
    succ = {}
    for tri in sub_faces:
        for i in range(3):
            u, v = int(tri[i]), int(tri[(i + 1) % 3])
            count[(min(u, v), max(u, v))] = count.get((min(u, v), max(u, v)), 0) + 1
            succ[(u, v)] = True
    nxt = {}
    for (u, v), _ in succ.items():
        if count[(min(u, v), max(u, v))] == 1:
            nxt[u] = v
    loop = [start]
    while True:
        v = nxt[loop[-1]]
        if v == start:
            return loop
        loop.append(v)


def patch_curvature_w(patch: CurvedPatch) -> float:
    """Squared distance between the corner-triangle centroid and the
    centroid of the central sub-triangle.

    Raises
    ------
    LevelError
        If the patch was not subdivided, so it has no central sub-triangle.
    """
    if patch.levels < 1 or len(patch.sub_faces) < 4:
        raise LevelError("patch has no central sub-triangle (levels must be >= 1)")
    corner_c = patch.positions[list(patch.corners)].mean(axis=0)
    center_c = patch.positions[patch.sub_faces[-1]].mean(axis=0)
    diff = corner_c - center_c
    return float(diff @ diff)


def curved_patches(mesh: HalfedgeMesh, levels: int = 3):
    """Subdivide ``mesh`` and build one :class:`CurvedPatch` per original face.

    Returns ``(subdivided_mesh, patches)``.
    """
    if not 1 <= levels <= 4:
        raise ConfigError("levels must be in 1..4")
    faces = mesh.faces()
    sub, patch_map = loop_subdivide(mesh, levels)
    sf = sub.faces()
    p = sub.positions
    patches = []
    for f, rows in enumerate(patch_map):
        corners = tuple(int(x) for x in faces[f])
        sub_faces = sf[rows]
        patch = CurvedPatch(
            parent_face=f, levels=levels, positions=p, sub_faces=sub_faces, corners=corners,
            boundary=_boundary_loop(sub_faces, corners[0]), point=embed(p[list(corners)]))
        patch.w = patch_curvature_w(patch)
        patches.append(patch)
    return sub, patches


@dataclass
class CurvedClassification:
    state: ClusterState
    mean_edge: float
    threshold_T: float
    error_max_pct: float

    @property
    def within_threshold(self) -> bool:
        return self.error_max_pct <= self.threshold_T


def classify_curved(patches, k: int, T: float, seed: int = 0, *, restarts: int = 8,
                    max_kmeans_iters: int = 200) -> CurvedClassification:
    """K-means over the (w, x, y, z) descriptors of curved patches.

    No remeshing follows.  Several seeded starts plus one farthest-point start
    are tried and the run with the smallest Error_max is kept (ties: lowest
    energy, then earliest start).  ``T`` is a percentage of the mean corner
    edge length.
    """
    if not patches:
        raise ConfigError("no patches to classify")
    if restarts < 1:
        raise ConfigError("restarts must be >= 1")
    pts = np.array([p.descriptor for p in patches])
    mean_edge = float(pts[:, 1:].mean())
    configs = [KMeansConfig(k, max_kmeans_iters, seed + r) for r in range(restarts)]
    configs.append(KMeansConfig(k, max_kmeans_iters, seed, init_strategy="farthest-point"))
    best = None
    for cfg in configs:
        st = cluster(pts, cfg)
        if best is None or (st.error_max, st.energy) < (best.error_max, best.energy):
            best = st
    err_pct = float(np.sqrt(best.error_max) / mean_edge * 100.0)
    _logger.info("curved classification k=%d: Error_max %.3f%% (T=%.3f%%)", k, err_pct, T)
    return CurvedClassification(best, mean_edge, float(T), err_pct)
