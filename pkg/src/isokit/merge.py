"""Optional grouping of decomposition triangles into larger convex patches.

Group size 2 pairs edge-adjacent triangles whose unfolded quad is convex.
Sizes 5, 6 and 7 take the full triangle fan around a vertex of that
valence.  Selection is greedy in ascending id order and never reuses a face.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .mesh import HalfedgeMesh
from .metric import ClusterState

GROUP_SIZES = (2, 5, 6, 7)


@dataclass
class MergeResult:
    group_size: int
    groups: list
    face_group: np.ndarray  # group id per face; singletons numbered after the groups
    class_mixture: list = field(default_factory=list)

    @property
    def coverage(self) -> float:
        """Percentage of faces that belong to a multi-face group."""
        n = len(self.face_group)
        return 100.0 * sum(len(g) for g in self.groups) / n if n else 0.0

    @property
    def n_singletons(self) -> int:
        return len(self.face_group) - sum(len(g) for g in self.groups)


def _angle(p, q, r) -> float:
    """Angle at p between pq and pr."""
    a, b = q - p, r - p
    return float(np.arctan2(np.linalg.norm(np.cross(a, b)), a @ b))


def pair_is_convex(mesh: HalfedgeMesh, h: int, tol: float = 1e-9) -> bool:
    """Whether the two faces at edge ``h`` unfold into a strictly convex quad.

    Unfolding about the shared edge keeps the corner angles, so the quad is
    convex when the two angles meeting at each shared-edge endpoint sum to
    less than pi.
    """
    t = mesh.he_twin[h]
    u, v = mesh.he_origin[h], mesh.he_origin[t]
    a = mesh.he_origin[mesh.prev(h)]
    b = mesh.he_origin[mesh.prev(t)]
    p = mesh.positions
    at_u = _angle(p[u], p[v], p[a]) + _angle(p[u], p[v], p[b])
    at_v = _angle(p[v], p[u], p[a]) + _angle(p[v], p[u], p[b])
    return at_u < np.pi - tol and at_v < np.pi - tol


def _face_rows(mesh: HalfedgeMesh) -> dict:
    return {f: i for i, f in enumerate(mesh.live_faces())}


def candidate_fans(mesh: HalfedgeMesh, size: int) -> list:
    """Face-row sets of the fans around every vertex of valence ``size``."""
    rows = _face_rows(mesh)
    return [(v, tuple(sorted(rows[f] for f in mesh.vertex_faces(v))))
            for v in mesh.live_vertices() if mesh.valence(v) == size]


def merge_patches(mesh_f: HalfedgeMesh, state: ClusterState | None, group_size: int) -> MergeResult:
    """Greedy grouping of faces into pairs or vertex fans.

    Face ids refer to rows of ``mesh_f.faces()``.  Groups may mix classes;
    ``class_mixture`` reports the label counts of each group when a state
    is given.
    """
    if group_size not in GROUP_SIZES:
        raise ConfigError(f"group_size must be one of {GROUP_SIZES}")
    n = mesh_f.n_faces
    used = np.zeros(n, dtype=bool)
    groups = []
    if group_size == 2:
        rows = _face_rows(mesh_f)
        for h in mesh_f.edge_halfedges():
            f0, f1 = rows[mesh_f.he_face[h]], rows[mesh_f.he_face[mesh_f.he_twin[h]]]
            if used[f0] or used[f1] or not pair_is_convex(mesh_f, h):
                continue
            used[[f0, f1]] = True
            groups.append(tuple(sorted((f0, f1))))
    else:
        for _, fan in candidate_fans(mesh_f, group_size):
            if used[list(fan)].any():
                continue
            used[list(fan)] = True
            groups.append(fan)

    face_group = -np.ones(n, dtype=np.int64)
    for gid, g in enumerate(groups):
        face_group[list(g)] = gid
    single = np.flatnonzero(face_group < 0)
    face_group[single] = len(groups) + np.arange(len(single))

    mixture = []
    if state is not None:
        for g in groups:
            labels, counts = np.unique(state.labels[list(g)], return_counts=True)
            mixture.append({int(k): int(c) for k, c in zip(labels, counts)})
    return MergeResult(group_size, groups, face_group, mixture)
