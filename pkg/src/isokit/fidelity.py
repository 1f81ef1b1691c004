"""Sampled symmetric Hausdorff distance between two surfaces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import HalfedgeMesh
from .spatial import TriangleIndex

DEFAULT_SAMPLES_PER_TRIANGLE = 25


@dataclass(frozen=True)
class HausdorffResult:
    mean_distance: float
    max_distance: float
    mean_pct_bb: float
    max_pct_bb: float
    sample_count: int


def sample_surface(mesh: HalfedgeMesh, samples_per_triangle: float = DEFAULT_SAMPLES_PER_TRIANGLE,
                   seed: int = 0, include_vertices: bool = True) -> np.ndarray:
    """Area-uniform random surface points, plus the vertices.

    The random stream is consumed row by row, so a denser sampling with the
    same seed contains every point of a sparser one.
    """
    faces = mesh.faces()
    tri = mesh.positions[faces]
    n = int(round(samples_per_triangle * len(faces)))
    pts = []
    if n > 0:
        area = 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
        cdf = np.cumsum(area)
        u = np.random.default_rng(seed).random((n, 3))
        which = np.minimum(np.searchsorted(cdf, u[:, 0] * cdf[-1], side="right"), len(faces) - 1)
        r1 = np.sqrt(u[:, 1])
        r2 = u[:, 2]
        t = tri[which]
        pts.append((1 - r1)[:, None] * t[:, 0] + (r1 * (1 - r2))[:, None] * t[:, 1]
                   + (r1 * r2)[:, None] * t[:, 2])
    if include_vertices:
        pts.append(mesh.positions[np.unique(faces)])
    return np.concatenate(pts) if pts else np.zeros((0, 3))


def one_sided(a: HalfedgeMesh, b: HalfedgeMesh, samples_per_triangle=DEFAULT_SAMPLES_PER_TRIANGLE,
              seed: int = 0, index: TriangleIndex | None = None) -> np.ndarray:
    """Distances from samples on ``a`` to the surface of ``b``."""
    index = index or TriangleIndex.from_mesh(b)
    return index.distance(sample_surface(a, samples_per_triangle, seed))


def hausdorff(a: HalfedgeMesh, b: HalfedgeMesh, samples_per_triangle=DEFAULT_SAMPLES_PER_TRIANGLE,
              seed: int = 0) -> HausdorffResult:
    """Symmetric sampled Hausdorff distance, normalized by ``a``'s bbox diagonal.

    The max is over both directions; the mean is over all samples of both
    directions.  Sampling gives a lower bound of the true distance.
    """
    d_ab = one_sided(a, b, samples_per_triangle, seed)
    d_ba = one_sided(b, a, samples_per_triangle, seed)
    alld = np.concatenate([d_ab, d_ba])
    diag = a.bounding_box().diagonal
    mean, mx = float(alld.mean()), float(alld.max())
    return HausdorffResult(mean, mx, mean / diag * 100.0, mx / diag * 100.0, len(alld))
