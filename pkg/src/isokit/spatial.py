"""Exact closest-point queries against a static triangle set."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree


def closest_point_on_triangles(q, a, b, c):
    """Closest points on triangles (a, b, c) to points q; all arrays (n, 3).

    Region-based projection (vertex, edge and face regions), vectorized.
    """
    q, a, b, c = (np.asarray(x, dtype=np.float64) for x in (q, a, b, c))
    ab, ac, ap = b - a, c - a, q - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = q - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = q - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        denom = va + vb + vc
        v = vb / denom
        w = vc / denom
        out = a + ab * v[:, None] + ac * w[:, None]

        # edge regions
        m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        t = d1 / (d1 - d3)
        out = np.where(m[:, None], a + ab * t[:, None], out)
        done = m

        m = (vb <= 0) & (d2 >= 0) & (d6 <= 0) & ~done
        t = d2 / (d2 - d6)
        out = np.where(m[:, None], a + ac * t[:, None], out)
        done = done | m

        m = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0) & ~done
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        out = np.where(m[:, None], b + (c - b) * t[:, None], out)
        done = done | m

    # vertex regions take precedence
    m = (d1 <= 0) & (d2 <= 0)
    out = np.where(m[:, None], a, out)
    m = (d3 >= 0) & (d4 <= d3)
    out = np.where(m[:, None], b, out)
    m = (d6 >= 0) & (d5 <= d6)
    out = np.where(m[:, None], c, out)
    return out


class TriangleIndex:
    """Closest-point index over a fixed triangle soup.

    A k-d tree over triangle centroids gives a first upper bound; every
    triangle that could beat it has its centroid within that bound plus the
    largest centroid-to-corner radius, so a ball query returns an exact
    candidate set.
    """

    def __init__(self, positions, faces):
        self.positions = np.asarray(positions, dtype=np.float64)
        self.faces = np.asarray(faces, dtype=np.int64)
        tri = self.positions[self.faces]
        self._a, self._b, self._c = tri[:, 0], tri[:, 1], tri[:, 2]
        self.centroids = tri.mean(axis=1)
        self.radius = float(np.linalg.norm(tri - self.centroids[:, None, :], axis=2).max())
        self.tree = cKDTree(self.centroids)

    @classmethod
    def from_mesh(cls, mesh) -> "TriangleIndex":
        return cls(mesh.positions, mesh.faces())

    def closest(self, points):
        """Closest surface points, distances and triangle ids for ``points``."""
        q = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        _, j = self.tree.query(q)
        best = closest_point_on_triangles(q, self._a[j], self._b[j], self._c[j])
        dist = np.linalg.norm(best - q, axis=1)
        tri = j.astype(np.int64)

        cands = self.tree.query_ball_point(q, dist + self.radius + 1e-12)
        counts = np.fromiter((len(c) for c in cands), dtype=np.int64, count=len(cands))
        if counts.sum():
            qi = np.repeat(np.arange(len(q)), counts)
            ti = np.fromiter((t for c in cands for t in c), dtype=np.int64, count=int(counts.sum()))
            cp = closest_point_on_triangles(q[qi], self._a[ti], self._b[ti], self._c[ti])
            cd = np.linalg.norm(cp - q[qi], axis=1)
            order = np.lexsort((ti, cd, qi))
            qi_s = qi[order]
            first = np.ones(len(order), dtype=bool)
            first[1:] = qi_s[1:] != qi_s[:-1]
            pick = order[first]
            sel_q = qi[pick]
            better = cd[pick] < dist[sel_q]
            sel_q = sel_q[better]
            pick = pick[better]
            dist[sel_q] = cd[pick]
            best[sel_q] = cp[pick]
            tri[sel_q] = ti[pick]
        return best, dist, tri

    def distance(self, points) -> np.ndarray:
        return self.closest(points)[1]

