"""Printable parts: thickened class patches with connector holes, hinge
connectors, and export of one canonical solid per class.

Canonical frame
    The inner triangle of a class lies in the XY plane with corner A at the
    origin, B on the +X axis and C at positive Y.  A is the corner opposite
    the shortest edge, B opposite the middle one and C opposite the longest,
    so AB has length z, BC length x and CA length y.  The solid extends
    toward +Z, which maps to the outward surface normal of every instance.

Holes
    Each side of a patch gets one rectangular cavity described by a frame
    (e, u, v, a): center e, u along the side's inner edge, v across the
    thickness and a pointing into the part.  The cavity is the box
    e + [-W/2, W/2] u + [-H/2, H/2] v + [.., D] a clipped by the side
    surface, so the back face always sits at depth D from e.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from shapely.geometry import MultiPoint

from .errors import (ConfigError, DegenerateNormalError, MeshIOError, OverlapError,
                     ProjectionError, TopologyError)
from .mesh import HalfedgeMesh
from .meshio import stl_bytes
from .metric import ClusterState, embed, embed_faces
from .solids import outward, ray_parity_inside, self_intersections, triangulate_polygon

_logger = logging.getLogger(__name__)

_MIRROR = np.diag([1.0, -1.0, 1.0])
_Z = np.array([0.0, 0.0, 1.0])


@dataclass
class FabConfig:
    thickness: float
    hole_width: float
    hole_height: float
    hole_depth: float
    clearance: float = 0.15
    rod_diameter: float = 1.0
    knuckle_segments: int = 16
    max_normal_angle: float = 80.0

    def validate(self) -> None:
        for name in ("thickness", "hole_width", "hole_height", "hole_depth", "rod_diameter"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.clearance < 0:
            raise ConfigError("clearance must be >= 0")
        if self.knuckle_segments < 8 or self.knuckle_segments % 4:
            raise ConfigError("knuckle_segments must be a multiple of 4, at least 8")

    @property
    def w_h(self) -> float:
        """Half thickness: offset of the curved-method hole center from the outer edge."""
        return 0.5 * self.thickness


@dataclass
class Placement:
    """Maps canonical coordinates p to model coordinates ``rotation @ p + translation``.

    When ``reflected`` is set the matrix contains the mirror y -> -y and has
    determinant -1.
    """

    face: int
    rotation: np.ndarray
    translation: np.ndarray
    reflected: bool
    corners: tuple  # model vertex ids matched to canonical corners A, B, C

    def apply(self, points) -> np.ndarray:
        return np.asarray(points) @ self.rotation.T + self.translation

    def to_json(self) -> dict:
        return {"face": int(self.face),
                "rotation": [[float(x) for x in row] for row in self.rotation],
                "translation": [float(x) for x in self.translation],
                "reflected": bool(self.reflected)}


@dataclass
class Hole:
    side: int
    center: np.ndarray
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    width: float
    height: float
    depth: float
    mouth: np.ndarray  # (4, 3) on the side surface
    back: np.ndarray  # (4, 3) at depth from the center

    def local(self, points) -> np.ndarray:
        frame = np.stack([self.u, self.v, self.a])
        return (np.asarray(points) - self.center) @ frame.T

    @property
    def box_corners(self) -> np.ndarray:
        """The 8 corners of the full cavity box, mouth plane through the center."""
        front = self.back - self.depth * self.a
        return np.vstack([front, self.back])


@dataclass
class ThickenedPatch:
    """One canonical solid per class.

    ``inner`` holds the inner surface vertices (canonical frame) and
    ``inner_faces`` its triangles; ``sides`` lists, for each of the three
    sides, the inner vertex ids running from one corner to the next.
    """

    class_id: int
    inner: np.ndarray
    inner_faces: np.ndarray
    corners: tuple
    sides: list
    normals: np.ndarray
    thickness: float
    count: int = 0
    placements: list = field(default_factory=list, repr=False)
    holes: list = field(default_factory=list)
    solid: HalfedgeMesh | None = None
    error_bound: float = 0.0
    curved: bool = False

    @property
    def outer(self) -> np.ndarray:
        return self.inner + self.thickness * self.normals

    @property
    def inner_triangle(self) -> np.ndarray:
        return self.inner[list(self.corners)]

    @property
    def outer_triangle(self) -> np.ndarray:
        return self.outer[list(self.corners)]


# ----------------------------------------------------------------------
# canonical triangles and placements


def canonical_triangle(point) -> np.ndarray:
    """Corners A, B, C of the planar triangle with sorted edge lengths (x, y, z)."""
    x, y, z = (float(v) for v in point)
    if not (x > 0 and x + y > z):
        raise ConfigError(f"edge lengths {point} do not form a triangle")
    cx = (y * y + z * z - x * x) / (2.0 * z)
    cy = np.sqrt(max(y * y - cx * cx, 0.0))
    return np.array([[0.0, 0.0, 0.0], [z, 0.0, 0.0], [cx, cy, 0.0]])


def corner_order(positions: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Vertex ids of every face reordered as (opposite x, opposite y, opposite z).

    Uses the same stable edge ranking as the embedding, so ties resolve the
    same way everywhere.
    """
    _, ranks = embed_faces(positions, faces)
    out = np.empty_like(faces)
    for j in range(3):  # local edge j joins corners j and j+1; opposite is j+2
        opp = faces[:, (j + 2) % 3]
        for r in range(3):
            sel = ranks[:, j] == r
            out[sel, r] = opp[sel]
    return out


def _kabsch(src: np.ndarray, dst: np.ndarray):
    sc, dc = src.mean(axis=0), dst.mean(axis=0)
    h = (src - sc).T @ (dst - dc)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T)) or 1.0
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return r, dc - r @ sc


def place(canon: np.ndarray, target: np.ndarray, normal: np.ndarray, face: int = -1,
          corners=()) -> Placement:
    """Rigid (or mirrored) fit of canonical corners onto ``target`` corners.

    ``normal`` is the instance's outward normal; canonical +Z is sent to it,
    mirroring the canonical part when the corner order runs clockwise.
    """
    n_order = np.cross(target[1] - target[0], target[2] - target[0])
    reflected = bool(n_order @ normal < 0)
    src = canon @ _MIRROR.T if reflected else canon
    h = float(np.linalg.norm(target[1] - target[0]))
    src4 = np.vstack([src, src.mean(axis=0) + h * _Z])
    dst4 = np.vstack([target, target.mean(axis=0) + h * normal / np.linalg.norm(normal)])
    r, t = _kabsch(src4, dst4)
    m = r @ _MIRROR if reflected else r
    return Placement(face, m, t, reflected, tuple(int(c) for c in corners))


# ----------------------------------------------------------------------
# thickening


def _class_faces(state: ClusterState, class_id: int) -> np.ndarray:
    members = np.flatnonzero(state.labels == class_id)
    if len(members) == 0:
        raise ConfigError(f"class {class_id} has no members")
    return members


def _check_normals(normals: np.ndarray, face_normal: np.ndarray, limit_deg: float) -> None:
    cosang = normals @ face_normal
    if (cosang < np.cos(np.radians(limit_deg))).any():
        raise DegenerateNormalError(
            f"averaged corner normal deviates more than {limit_deg} degrees from the face normal")


def thicken_class(mesh_f: HalfedgeMesh, state: ClusterState, class_id: int, cfg: FabConfig) -> ThickenedPatch:
    """Canonical solid of one class of a flat decomposition (no holes yet).

    Outer corners are offset along the per-corner vertex normals of all
    instances, each expressed in that instance's canonical frame and
    averaged.
    """
    cfg.validate()
    members = _class_faces(state, class_id)
    canon = canonical_triangle(state.centroids[class_id])
    faces = mesh_f.faces()
    order = corner_order(mesh_f.positions, faces)
    fn = mesh_f.face_normals()
    vn = mesh_f.vertex_normals()
    acc = np.zeros((3, 3))
    placements = []
    for f in members:
        ids = order[f]
        pl = place(canon, mesh_f.positions[ids], fn[f], face=int(f), corners=ids)
        placements.append(pl)
        acc += vn[ids] @ pl.rotation  # rotation^T applied to each normal
    normals = acc / np.linalg.norm(acc, axis=1, keepdims=True)
    _check_normals(normals, _Z, cfg.max_normal_angle)
    bound = float(np.sqrt(state.per_triangle_distance[members].max()))
    patch = ThickenedPatch(
        class_id=int(class_id), inner=canon, inner_faces=np.array([[0, 1, 2]]), corners=(0, 1, 2),
        sides=[[0, 1], [1, 2], [2, 0]], normals=normals, thickness=cfg.thickness,
        count=len(members), placements=placements, error_bound=bound)
    patch.solid = build_solid(patch)
    return patch


def thicken_all(mesh_f: HalfedgeMesh, state: ClusterState, cfg: FabConfig) -> list:
    return [thicken_class(mesh_f, state, c, cfg) for c in range(state.k)
            if (state.labels == c).any()]


def reassembly_residuals(mesh_f: HalfedgeMesh, patch: ThickenedPatch) -> np.ndarray:
    """Per-instance max distance between placed canonical corners and the model face."""
    out = []
    for pl in patch.placements:
        placed = pl.apply(patch.inner_triangle)
        out.append(np.linalg.norm(placed - mesh_f.positions[list(pl.corners)], axis=1).max())
    return np.array(out)


# ----------------------------------------------------------------------
# side strips and solid assembly


def _strip(patch: ThickenedPatch, side: int):
    """Inner/outer polylines of a side and their arc-length parameters."""
    ids = patch.sides[side]
    inner = patch.inner[ids]
    outer = patch.outer[ids]
    seg = np.linalg.norm(np.diff(inner, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)]) / seg.sum()
    return ids, inner, outer, s


def _strip_hit(inner, outer, s, origin, direction):
    """Intersect the line origin + lam*direction with a side strip.

    Returns (point, (s, r)) or None.
    """
    best = None
    for j in range(len(s) - 1):
        quad = [(inner[j], (s[j], 0.0)), (inner[j + 1], (s[j + 1], 0.0)),
                (outer[j + 1], (s[j + 1], 1.0)), (outer[j], (s[j], 1.0))]
        for tri in ((0, 1, 2), (0, 2, 3)):
            p0, p1, p2 = (quad[i][0] for i in tri)
            e1, e2 = p1 - p0, p2 - p0
            m = np.column_stack([e1, e2, -direction])
            if abs(np.linalg.det(m)) < 1e-300:
                continue
            b1, b2, lam = np.linalg.solve(m, origin - p0)
            if b1 < -1e-12 or b2 < -1e-12 or b1 + b2 > 1 + 1e-12:
                continue
            uv = [np.array(quad[i][1]) for i in tri]
            param = uv[0] + b1 * (uv[1] - uv[0]) + b2 * (uv[2] - uv[0])
            if best is None or abs(lam) < abs(best[2]):
                best = (origin + lam * direction, param, lam)
    return None if best is None else best[:2]


def _side_faces(patch, side, hole, base_outer, mouth_ids):
    """Triangulate one side strip, leaving the hole mouth open."""
    ids, inner, outer, s = _strip(patch, side)
    n = len(ids)
    length = float(np.linalg.norm(np.diff(inner, axis=0), axis=1).sum())
    t = patch.thickness
    pts = [(s[j] * length, 0.0) for j in range(n)] + [(s[j] * length, t) for j in range(n)]
    vid = list(ids) + [base_outer + i for i in ids]
    shell = list(range(n)) + list(range(2 * n - 1, n - 1, -1))
    holes = []
    if hole is not None:
        start = len(pts)
        for uv in hole[1]:
            pts.append((uv[0] * length, uv[1] * t))
        vid.extend(mouth_ids)
        holes.append(list(range(start, start + 4)))
    tris = triangulate_polygon(np.array(pts), shell, holes)
    return np.array(vid)[tris]


def build_solid(patch: ThickenedPatch, hole_params=None) -> HalfedgeMesh:
    """Assemble and validate the closed solid of a patch.

    ``hole_params`` maps side -> (Hole, mouth (s, r) params).
    """
    hole_params = hole_params or {}
    n = len(patch.inner)
    pos = [patch.inner, patch.outer]
    faces = [patch.inner_faces, patch.inner_faces + n]
    nxt = 2 * n
    for side in range(len(patch.sides)):
        entry = hole_params.get(side)
        mouth_ids = []
        if entry is not None:
            hole = entry[0]
            mouth_ids = list(range(nxt, nxt + 4))
            back_ids = list(range(nxt + 4, nxt + 8))
            pos.extend([hole.mouth, hole.back])
            nxt += 8
            for j in range(4):
                k = (j + 1) % 4
                faces.append(np.array([[mouth_ids[j], mouth_ids[k], back_ids[k]],
                                       [mouth_ids[j], back_ids[k], back_ids[j]]]))
            faces.append(np.array([[back_ids[0], back_ids[1], back_ids[2]],
                                   [back_ids[0], back_ids[2], back_ids[3]]]))
        faces.append(_side_faces(patch, side, entry, n, mouth_ids))
    p = np.vstack(pos)
    f = outward(p, np.vstack(faces))
    try:
        mesh = HalfedgeMesh(p, f)
    except TopologyError as exc:
        raise TopologyError(f"class {patch.class_id}: {exc}") from exc
    bad = self_intersections(mesh.positions, mesh.faces())
    if len(bad):
        raise OverlapError(f"class {patch.class_id}: solid self-intersects "
                           f"({len(bad)} edge/face crossings)")
    probe = _interior_probe(patch)
    if not ray_parity_inside(mesh.positions, mesh.faces(), probe):
        raise TopologyError(f"class {patch.class_id}: interior probe reported outside")
    return mesh


def _interior_probe(patch: ThickenedPatch) -> np.ndarray:
    """A point inside the solid away from the holes: above the inner centroid."""
    tri = patch.inner_triangle
    g = tri.mean(axis=0)
    k = np.argmin(np.linalg.norm(patch.inner - g, axis=1))
    base = patch.inner[k] if patch.curved else g
    n = patch.normals[k] if patch.curved else patch.normals.mean(axis=0)
    return base + 0.5 * patch.thickness * n / np.linalg.norm(n)


# ----------------------------------------------------------------------
# holes


def _outer_height(patch: ThickenedPatch, point: np.ndarray) -> float:
    """Distance along +Z from ``point`` to the outer surface.

    Uses the outer triangle whose (extended) plane is hit closest to its
    interior, so points just outside the outer footprint still resolve.
    """
    outer = patch.outer
    best = None
    for tri in patch.inner_faces:
        p0, p1, p2 = outer[tri]
        m = np.column_stack([p1 - p0, p2 - p0, -_Z])
        if abs(np.linalg.det(m)) < 1e-300:
            continue
        b1, b2, lam = np.linalg.solve(m, point - p0)
        inside = min(b1, b2, 1.0 - b1 - b2)
        if best is None or inside > best[0]:
            best = (inside, float(lam))
    if best is None or best[1] <= 0:
        raise ProjectionError("vertical line misses the outer surface")
    return best[1]


def _inward(patch, side, u, v):
    a = np.cross(v, u)
    a /= np.linalg.norm(a)
    ids = patch.sides[side]
    mid = 0.5 * (patch.inner[ids[0]] + patch.inner[ids[-1]])
    if a @ (patch.inner_triangle.mean(axis=0) - mid) < 0:
        a = -a
    return a


def _make_hole(patch, side, e, u, v, a, cfg) -> tuple:
    W, H, D = cfg.hole_width, cfg.hole_height, cfg.hole_depth
    _, inner, outer, s = _strip(patch, side)
    offs = [(-0.5 * W, -0.5 * H), (0.5 * W, -0.5 * H), (0.5 * W, 0.5 * H), (-0.5 * W, 0.5 * H)]
    mouth, params, back = [], [], []
    for du, dv in offs:
        q = e + du * u + dv * v
        hit = _strip_hit(inner, outer, s, q, a)
        if hit is None:
            raise OverlapError(f"side {side}: hole mouth leaves the side strip")
        point, param = hit
        if not (1e-9 < param[0] < 1 - 1e-9 and 1e-9 < param[1] < 1 - 1e-9):
            raise OverlapError(f"side {side}: hole ({W}x{H}) does not fit inside the side quad")
        if (point - q) @ a >= D:
            raise OverlapError(f"side {side}: hole depth {D} ends outside the part")
        mouth.append(point)
        params.append(param)
        back.append(q + D * a)
    hole = Hole(side, e, u, v, a, W, H, D, np.array(mouth), np.array(back))
    return hole, np.array(params)


def _check_overlap(holes: list) -> None:
    prints = []
    for h in holes:
        # footprint in the inner plane of everything deeper than the mouth
        pts = np.vstack([h.mouth, h.back])[:, :2]
        prints.append(MultiPoint([tuple(p) for p in pts]).convex_hull)
    for i in range(len(prints)):
        for j in range(i + 1, len(prints)):
            if prints[i].intersection(prints[j]).area > 0:
                raise OverlapError(f"holes on sides {holes[i].side} and {holes[j].side} overlap")


def _finish(patch: ThickenedPatch, entries: dict) -> ThickenedPatch:
    holes = [entries[s][0] for s in sorted(entries)]
    _check_overlap(holes)
    out = replace(patch, holes=holes)
    out.solid = build_solid(out, entries)
    return out


def cut_holes_planar(patch: ThickenedPatch, cfg: FabConfig) -> ThickenedPatch:
    """One hole per side, centered halfway up the vertical line from the
    inner edge midpoint to the outer surface, parallel to the inner plane.
    """
    cfg.validate()
    entries = {}
    for side, ids in enumerate(patch.sides):
        va, vb = patch.inner[ids[0]], patch.inner[ids[-1]]
        mid = 0.5 * (va + vb)
        c = mid + 0.5 * _outer_height(patch, mid) * _Z
        u = (vb - va) / np.linalg.norm(vb - va)
        a = _inward(patch, side, u, _Z)
        entries[side] = _make_hole(patch, side, c, u, _Z, a, cfg)
    return _finish(patch, entries)


def _closest_on_polyline(points: np.ndarray, q: np.ndarray):
    best = None
    for j in range(len(points) - 1):
        p0, p1 = points[j], points[j + 1]
        d = p1 - p0
        t = float(np.clip((q - p0) @ d / (d @ d), 0.0, 1.0))
        c = p0 + t * d
        dist = float(np.linalg.norm(q - c))
        if best is None or dist < best[0]:
            best = (dist, c, j, t)
    return best


def cut_holes_curved(patch: ThickenedPatch, cfg: FabConfig) -> ThickenedPatch:
    """One hole per side placed from the outer edge: c is the midpoint of the
    inner corners, d its closest point on the outer edge, and the center e
    sits at distance ``w_h`` from d toward c.  The hole lies in the plane
    through both inner corners and d.
    """
    cfg.validate()
    entries = {}
    for side, ids in enumerate(patch.sides):
        va, vb = patch.inner[ids[0]], patch.inner[ids[-1]]
        c = 0.5 * (va + vb)
        outer = patch.outer[ids]
        dist, d, j, t = _closest_on_polyline(outer, c)
        if (j == 0 and t <= 0.0) or (j == len(outer) - 2 and t >= 1.0) or dist <= 0:
            raise ProjectionError(f"side {side}: projection of the edge midpoint leaves the strip")
        e = d + cfg.w_h * (c - d) / dist
        u = (vb - va) / np.linalg.norm(vb - va)
        v = (d - c) - ((d - c) @ u) * u
        v /= np.linalg.norm(v)
        a = _inward(patch, side, u, v)
        entries[side] = _make_hole(patch, side, e, u, v, a, cfg)
    return _finish(patch, entries)


def holes_congruent(patch: ThickenedPatch, tol: float = 1e-9) -> bool:
    """All cavity boxes of a patch agree in their own frames."""
    if not patch.holes:
        return True
    ref = patch.holes[0].local(patch.holes[0].box_corners)
    return all(np.abs(h.local(h.box_corners) - ref).max() <= tol for h in patch.holes[1:])


# ----------------------------------------------------------------------
# curved classes


def thicken_curved_class(patches, classification, class_id: int, cfg: FabConfig,
                         vertex_normals: np.ndarray) -> ThickenedPatch:
    """Canonical solid of a curved class, taken from its medoid patch.

    The medoid (member closest to the class centroid in descriptor space,
    lowest id on ties) is moved so its corners lie in the XY plane with the
    canonical corner order; its sub-triangles form the inner surface and
    its subdivided-mesh vertex normals give the offset directions.
    """
    cfg.validate()
    state = classification.state
    members = _class_faces(state, class_id)
    desc = np.array([patches[i].descriptor for i in members])
    diff = desc - state.centroids[class_id]
    rep = patches[int(members[np.argmin(np.einsum("ij,ij->i", diff, diff))])]

    corner_ids = np.array(rep.corners)
    order = corner_order(rep.positions, corner_ids[None, :])[0]
    tri = rep.positions[order]
    sub = rep.sub_faces
    fn = np.cross(rep.positions[sub[:, 1]] - rep.positions[sub[:, 0]],
                  rep.positions[sub[:, 2]] - rep.positions[sub[:, 0]]).sum(axis=0)
    fn /= np.linalg.norm(fn)
    canon = canonical_triangle(embed(tri))
    pl = place(canon, tri, fn)
    verts = np.unique(sub)
    local = {int(v): i for i, v in enumerate(verts)}
    inner = (rep.positions[verts] - pl.translation) @ pl.rotation
    normals = vertex_normals[verts] @ pl.rotation
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    inner_faces = np.vectorize(local.get)(sub)

    loop = [local[int(v)] for v in rep.boundary]
    cpos = [loop.index(local[int(c)]) for c in rep.corners]
    start = cpos[0]
    loop = loop[start:] + loop[:start]
    cut = sorted((p - start) % len(loop) for p in cpos)
    sides = [loop[cut[i]:cut[i + 1] + 1] if i < 2 else loop[cut[2]:] + [loop[0]] for i in range(3)]

    corner_local = tuple(local[int(v)] for v in order)
    bound = float(np.sqrt(state.per_triangle_distance[members].max()))
    placements = []
    for i in members:
        p = patches[int(i)]
        ids = corner_order(p.positions, np.array(p.corners)[None, :])[0]
        sf = p.sub_faces
        n = np.cross(p.positions[sf[:, 1]] - p.positions[sf[:, 0]],
                     p.positions[sf[:, 2]] - p.positions[sf[:, 0]]).sum(axis=0)
        placements.append(place(inner[list(corner_local)], p.positions[ids], n,
                                face=p.parent_face, corners=ids))
    patch = ThickenedPatch(
        class_id=int(class_id), inner=inner, inner_faces=inner_faces, corners=corner_local,
        sides=sides, normals=normals, thickness=cfg.thickness, count=len(members),
        placements=placements, error_bound=bound, curved=True)
    _check_normals(normals[list(corner_local)], _Z, cfg.max_normal_angle)
    patch.solid = build_solid(patch)
    return patch


# ----------------------------------------------------------------------
# hinge connector


@dataclass
class HingeConnector:
    half_a: HalfedgeMesh
    half_b: HalfedgeMesh
    axis_point: np.ndarray
    axis_direction: np.ndarray
    tongue: tuple  # (width, height, depth)
    channel_diameter: float
    rod_diameter: float
    knuckle_radius: float
    clearance: float
    hole: tuple  # (width, height, depth)

    def fits(self) -> bool:
        return all(t <= h - 2.0 * self.clearance + 1e-12 for t, h in zip(self.tongue, self.hole))


def _regular_polygon(n: int, radius: float, start_deg: float = 0.0) -> np.ndarray:
    ang = np.radians(start_deg) + 2.0 * np.pi * np.arange(n) / n
    return radius * np.column_stack([np.cos(ang), np.sin(ang)])


def make_hinge(cfg: FabConfig) -> HingeConnector:
    """Two-part hinge: each half is a box tongue plus a knuckle around the rod.

    Coordinates: X runs along the hinge axis (hole width), Y across the
    joint (hole depth, tongue of half A toward -Y) and Z across the
    thickness (hole height).  Half A carries its knuckle on the first half
    of the width and half B, a 180 degree turn of A about Z, on the second
    half; an axial gap of one clearance separates the knuckles.

    Raises
    ------
    ConfigError
        If the clearance eats a hole dimension or the rod channel does not
        fit the knuckle.
    """
    cfg.validate()
    W, H, D, c = cfg.hole_width, cfg.hole_height, cfg.hole_depth, cfg.clearance
    if 2.0 * c >= min(W, H, D):
        raise ConfigError(f"clearance {c} must be less than half of every hole dimension")
    wt, ht, dt = W - 2 * c, H - 2 * c, D - 2 * c
    radius = 0.5 * ht
    seg = cfg.knuckle_segments
    channel = cfg.rod_diameter + c
    rc = 0.5 * channel / np.cos(np.pi / seg)  # circumscribed polygon
    if 0.5 * channel >= radius * np.cos(np.pi / seg) - 0.1 * radius:
        raise ConfigError("rod channel does not fit inside the knuckle")
    gap = max(c, 1e-3 * ht)
    if radius + gap >= dt:
        raise ConfigError("hole depth too small for the knuckle")
    x1 = 0.5 * wt - 0.5 * gap
    yb = -(radius + gap)

    # profile of section 1 in (y, z): rectangle [-dt, 0] x [-ht/2, ht/2] plus the
    # half 16-gon on the +Y side, with the channel polygon as a hole
    arc = _regular_polygon(seg, radius, -90.0)[: seg // 2 + 1]
    shell = np.vstack([[[-dt, -radius], [yb, -radius]], arc, [[yb, radius], [-dt, radius]]])
    hole = _regular_polygon(seg, rc, 180.0 / seg)
    n_s, n_h = len(shell), len(hole)

    pos = []
    faces = []

    def ring3(ring2, x):
        return np.column_stack([np.full(len(ring2), x), ring2])

    base = {}
    for key, ring, x in (("s0", shell, 0.0), ("s1", shell, x1), ("h0", hole, 0.0), ("h1", hole, x1)):
        base[key] = sum(len(p) for p in pos)
        pos.append(ring3(ring, x))
    rect = np.array([[-dt, -radius], [yb, -radius], [yb, radius], [-dt, radius]])
    base["r2"] = sum(len(p) for p in pos)
    pos.append(ring3(rect, wt))
    P = np.vstack(pos)

    # caps
    pts0 = np.vstack([shell, hole])
    tri = triangulate_polygon(pts0, list(range(n_s)), [list(range(n_s, n_s + n_h))])
    idx0 = np.concatenate([base["s0"] + np.arange(n_s), base["h0"] + np.arange(n_h)])
    faces.append(idx0[tri])
    # cap at x1: section-1 profile minus the section-2 rectangle
    keep = [1] + list(range(2, n_s - 2)) + [n_s - 2]
    cap1 = triangulate_polygon(pts0, keep, [list(range(n_s, n_s + n_h))])
    idx1 = np.concatenate([base["s1"] + np.arange(n_s), base["h1"] + np.arange(n_h)])
    faces.append(idx1[cap1])
    faces.append(base["r2"] + np.array([[0, 1, 2], [0, 2, 3]]))

    def wall(a0, a1, b0, b1):
        faces.append(np.array([[a0, a1, b1], [a0, b1, b0]]))

    for i in range(n_s):
        j = (i + 1) % n_s
        wall(base["s0"] + i, base["s0"] + j, base["s1"] + i, base["s1"] + j)
    for i in range(n_h):
        j = (i + 1) % n_h
        wall(base["h0"] + i, base["h0"] + j, base["h1"] + i, base["h1"] + j)
    # section 2 walls: bottom, inner face at y=yb, top, end at y=-dt
    s1 = base["s1"]
    r2 = base["r2"]
    wall(s1 + 0, s1 + 1, r2 + 0, r2 + 1)
    wall(s1 + 1, s1 + n_s - 2, r2 + 1, r2 + 2)
    wall(s1 + n_s - 2, s1 + n_s - 1, r2 + 2, r2 + 3)
    wall(s1 + n_s - 1, s1 + 0, r2 + 3, r2 + 0)

    F = outward(P, np.vstack(faces))
    half_a = HalfedgeMesh(P, F)
    turn = np.array([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]])
    pb = P @ turn.T + np.array([wt, 0.0, 0.0])
    half_b = HalfedgeMesh(pb, F.copy())
    for half in (half_a, half_b):
        if len(self_intersections(half.positions, half.faces())):
            raise TopologyError("hinge half self-intersects")
    return HingeConnector(half_a, half_b, np.zeros(3), np.array([1.0, 0.0, 0.0]),
                          (wt, ht, dt), channel, cfg.rod_diameter, radius, c, (W, H, D))


# ----------------------------------------------------------------------
# export


def hinge_count(n_faces: int) -> int:
    """Connectors needed for a closed triangle mesh: one per edge, 3F/2."""
    if (3 * n_faces) % 2:
        raise ConfigError("a closed triangle mesh has an even face count")
    return 3 * n_faces // 2


def export_parts(patches, connector: HingeConnector, out_dir, *, groups=None) -> dict:
    """Write one binary STL per class, both hinge halves and ``manifest.json``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        classes = []
        for patch in patches:
            name = f"class_{patch.class_id}.stl"
            (out / name).write_bytes(stl_bytes(patch.solid.positions, patch.solid.faces()))
            classes.append({"id": patch.class_id, "count": patch.count, "stl": name,
                            "curved": patch.curved,
                            "transforms": [pl.to_json() for pl in patch.placements]})
        (out / "hinge_a.stl").write_bytes(stl_bytes(connector.half_a.positions, connector.half_a.faces()))
        (out / "hinge_b.stl").write_bytes(stl_bytes(connector.half_b.positions, connector.half_b.faces()))
        total = sum(p.count for p in patches)
        manifest = {
            "classes": classes,
            "total_parts": total,
            "hinge": {"count": hinge_count(total), "stl_a": "hinge_a.stl", "stl_b": "hinge_b.stl",
                      "rod_diameter": connector.rod_diameter},
        }
        if groups is not None:
            manifest["groups"] = [int(g) for g in groups]
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise MeshIOError(f"cannot write parts to {out}: {exc}") from exc
    return manifest
