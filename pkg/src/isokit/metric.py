"""Sorted-edge-length embedding of triangles and the clustering energy.

A triangle maps to the point (x, y, z) of its shortest, middle and longest
edge lengths.  Congruent triangles (including mirror images) land on the
same point, and squared Euclidean distance between points measures
dissimilarity.  Curved patches add a fourth coordinate ``w`` in front.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateError, EmptyClusterError


class TrianglePoint(NamedTuple):
    x: float
    y: float
    z: float


class CurvedPatchPoint(NamedTuple):
    w: float
    x: float
    y: float
    z: float


def embed(triangle) -> TrianglePoint:
    """Sorted edge lengths of a triangle given as three 3D points.

    Raises
    ------
    DegenerateError
        For a zero-area triangle.
    """
    p = np.asarray(triangle, dtype=np.float64).reshape(3, 3)
    area2 = np.linalg.norm(np.cross(p[1] - p[0], p[2] - p[0]))
    lengths = np.sort(np.linalg.norm(p - np.roll(p, -1, axis=0), axis=1))
    if area2 <= 1e-14 * lengths[-1] ** 2:
        raise DegenerateError("cannot embed a zero-area triangle")
    return TrianglePoint(*map(float, lengths))


def face_edge_lengths(positions: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """(F, 3) lengths of edges (v0v1, v1v2, v2v0) per face."""
    tri = positions[faces]
    return np.linalg.norm(tri - np.roll(tri, -1, axis=1), axis=2)


def embed_faces(positions: np.ndarray, faces: np.ndarray):
    """Vectorized :func:`embed`.

    Returns
    -------
    points : (F, 3) sorted edge lengths
    ranks : (F, 3) int, rank of each local edge (v0v1, v1v2, v2v0) in the sort
    """
    lengths = face_edge_lengths(positions, faces)
    order = np.argsort(lengths, axis=1, kind="stable")
    points = np.take_along_axis(lengths, order, axis=1)
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(3)[None, :].repeat(len(order), 0), axis=1)
    return points, ranks


def distance(a, b) -> float:
    """Squared Euclidean distance between two embeddings (any dimension)."""
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return float(d @ d)


def distance_curved(a: CurvedPatchPoint, b: CurvedPatchPoint) -> float:
    return distance(a, b)


def sq_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, k) squared distances, computed as explicit differences.

    The expanded |a|^2 - 2ab + |b|^2 form loses the exact zeros the
    tie-breaking and convergence tests rely on, so it is avoided.
    """
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def centroid(members) -> TrianglePoint:
    """Componentwise mean of sorted-edge points, re-sorted if the mean is not.

    Raises
    ------
    EmptyClusterError
        If ``members`` is empty.
    """
    arr = np.asarray(members, dtype=np.float64)
    if arr.size == 0:
        raise EmptyClusterError("centroid of an empty cluster")
    arr = arr.reshape(-1, 3)
    return TrianglePoint(*map(float, np.sort(arr.mean(axis=0))))


@dataclass
class ClusterState:
    """Labels, centroids and per-point squared errors of one clustering.

    ``energy`` is the sum and ``error_max`` / ``error_mean`` the max and mean
    of ``per_triangle_distance``, all in squared model units.
    """

    labels: np.ndarray
    centroids: np.ndarray
    per_triangle_distance: np.ndarray
    energy: float = 0.0
    error_max: float = 0.0
    error_mean: float = 0.0
    iterations: int = 0
    energy_trace: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.centroids)

    @property
    def n(self) -> int:
        return len(self.labels)

    def error_lengths(self) -> np.ndarray:
        """Per-point error in length units (square root of the squared distance)."""
        return np.sqrt(self.per_triangle_distance)

    def error_percent(self, mean_edge: float) -> np.ndarray:
        return self.error_lengths() / mean_edge * 100.0

    def copy(self) -> "ClusterState":
        return ClusterState(self.labels.copy(), self.centroids.copy(),
                            self.per_triangle_distance.copy(), self.energy,
                            self.error_max, self.error_mean, self.iterations,
                            list(self.energy_trace))


def make_state(points: np.ndarray, labels: np.ndarray, centroids: np.ndarray, **extra) -> ClusterState:
    """Build a consistent state from labels and centroids."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    centroids = np.asarray(centroids, dtype=np.float64)
    diff = points - centroids[labels]
    d = np.einsum("nd,nd->n", diff, diff)
    state = ClusterState(labels, centroids, d, **extra)
    update_aggregates(state)
    return state


def update_aggregates(state: ClusterState) -> None:
    d = state.per_triangle_distance
    state.energy = float(d.sum())
    state.error_max = float(d.max()) if len(d) else 0.0
    state.error_mean = float(d.mean()) if len(d) else 0.0


def energy(state: ClusterState) -> float:
    return float(state.per_triangle_distance.sum())


def errors(state: ClusterState, mean_edge: float | None = None) -> dict:
    """Max and mean clustering error, squared and in length units.

    With ``mean_edge`` the length-unit errors are also given in percent of
    the mean edge length.
    """
    lengths = state.error_lengths()
    out = {
        "error_max": state.error_max,
        "error_mean": state.error_mean,
        "error_max_abs": float(lengths.max()) if len(lengths) else 0.0,
        "error_mean_abs": float(lengths.mean()) if len(lengths) else 0.0,
    }
    if mean_edge:
        out["error_max_pct"] = out["error_max_abs"] / mean_edge * 100.0
        out["error_mean_pct"] = out["error_mean_abs"] / mean_edge * 100.0
    return out


def recompute_energy(points: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> float:
    """Brute-force energy, one point at a time; used as an oracle."""
    total = 0.0
    for p, lab in zip(np.asarray(points, dtype=np.float64), labels):
        total += distance(p, centroids[lab])
    return total
