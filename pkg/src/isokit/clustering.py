"""Deterministic K-means over triangle embeddings."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .metric import ClusterState, make_state, sq_distances

_logger = logging.getLogger(__name__)

INIT_STRATEGIES = ("greedy-kmeans++", "farthest-point")


@dataclass
class KMeansConfig:
    k: int
    max_kmeans_iters: int = 200
    seed: int = 0
    init_strategy: str = "greedy-kmeans++"

    def validate(self, n: int | None = None) -> None:
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if n is not None and self.k > n:
            raise ConfigError(f"k={self.k} exceeds the number of points ({n})")
        if self.max_kmeans_iters < 1:
            raise ConfigError("max_kmeans_iters must be >= 1")
        if self.init_strategy not in INIT_STRATEGIES:
            raise ConfigError(f"unknown init_strategy '{self.init_strategy}'")


def assign_labels(points, centroids) -> np.ndarray:
    """Index of the nearest centroid per point; ties go to the lowest index."""
    points = np.asarray(points, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    if len(points) == 0:
        return np.zeros(0, dtype=np.int64)
    return np.argmin(sq_distances(points, centroids), axis=1).astype(np.int64)


def _greedy_kmeanspp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    n_trials = 2 + int(np.log(k))
    centers = [points[rng.integers(n)]]
    closest = sq_distances(points, np.array(centers))[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            # every point coincides with a center; pad with duplicates
            centers.append(points[rng.integers(n)])
            continue
        cand = np.searchsorted(np.cumsum(closest), rng.uniform(size=n_trials) * total)
        cand = np.minimum(cand, n - 1)
        cand_d = np.minimum(closest[None, :], sq_distances(points[cand], points))
        best = int(np.argmin(cand_d.sum(axis=1)))
        centers.append(points[cand[best]])
        closest = cand_d[best]
    return np.array(centers)


def _farthest_point(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    idx = [int(rng.integers(len(points)))]
    closest = sq_distances(points, points[idx])[:, 0]
    for _ in range(1, k):
        nxt = int(np.argmax(closest))
        idx.append(nxt)
        closest = np.minimum(closest, sq_distances(points, points[[nxt]])[:, 0])
    return points[idx].copy()


def initial_centroids(points, cfg: KMeansConfig) -> np.ndarray:
    """Seeded initial centroids for ``cfg.init_strategy``."""
    points = np.asarray(points, dtype=np.float64)
    cfg.validate(len(points))
    rng = np.random.default_rng(cfg.seed)
    if cfg.init_strategy == "farthest-point":
        return _farthest_point(points, cfg.k, rng)
    return _greedy_kmeanspp(points, cfg.k, rng)


def _update_centroids(points, labels, centroids):
    """Cluster means; empty clusters are reseeded with the worst-fit point.

    Returns the new centroids (possibly fewer rows when no repair is
    possible) and the possibly-modified labels.
    """
    k = len(centroids)
    d = points.shape[1]
    sums = np.zeros((k, d))
    np.add.at(sums, labels, points)
    counts = np.bincount(labels, minlength=k)
    new = centroids.copy()
    nz = counts > 0
    new[nz] = sums[nz] / counts[nz, None]
    empty = np.flatnonzero(~nz)
    if len(empty) == 0:
        return new, labels
    labels = labels.copy()
    for c in empty:
        diff = points - new[labels]
        dist = np.einsum("nd,nd->n", diff, diff)
        counts = np.bincount(labels, minlength=k)
        # only take points from clusters that keep at least one member
        dist[counts[labels] <= 1] = -1.0
        j = int(np.argmax(dist))
        if dist[j] <= 0:
            break
        old = labels[j]
        labels[j] = c
        new[c] = points[j]
        members = labels == old
        new[old] = points[members].mean(axis=0)
    counts = np.bincount(labels, minlength=k)
    if (counts == 0).any():
        keep = np.flatnonzero(counts > 0)
        _logger.warning("empty clusters could not be repaired; effective k %d -> %d", k, len(keep))
        remap = -np.ones(k, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        return new[keep], remap[labels]
    return new, labels


def lloyd(points, centroids, max_iters: int = 200):
    """Alternate mean update and nearest assignment until the labels repeat.

    Returns ``(labels, centroids, iterations, energy_trace)``; the trace
    holds the energy after every full step and never increases.
    """
    points = np.asarray(points, dtype=np.float64)
    centroids = np.array(centroids, dtype=np.float64)
    labels = assign_labels(points, centroids)
    diff = points - centroids[labels]
    trace = [float(np.einsum("nd,nd->", diff, diff))]
    it = 0
    for it in range(1, max_iters + 1):
        centroids, labels = _update_centroids(points, labels, centroids)
        new_labels = assign_labels(points, centroids)
        diff = points - centroids[new_labels]
        trace.append(float(np.einsum("nd,nd->", diff, diff)))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    else:
        centroids, labels = _update_centroids(points, labels, centroids)
    return labels, centroids, it, trace


def cluster(points, cfg: KMeansConfig, init: np.ndarray | None = None) -> ClusterState:
    """K-means on embedding points (rows), deterministic for a fixed seed.

    ``init`` warm-starts from given centroids instead of seeding.

    Raises
    ------
    ConfigError
        If ``k`` is outside ``1..n``.
    """
    points = np.asarray(points, dtype=np.float64)
    cfg.validate(len(points))
    start = initial_centroids(points, cfg) if init is None else np.asarray(init, dtype=np.float64)
    labels, centroids, iters, trace = lloyd(points, start, cfg.max_kmeans_iters)
    return make_state(points, labels, centroids, iterations=iters, energy_trace=trace)
