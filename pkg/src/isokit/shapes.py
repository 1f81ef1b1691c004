"""Deterministic synthetic closed meshes (test corpus and fixtures)."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .mesh import HalfedgeMesh

PHI = (1.0 + 5.0 ** 0.5) / 2.0


def icosahedron_arrays(radius: float = 1.0):
    v = np.array([
        [-1, PHI, 0], [1, PHI, 0], [-1, -PHI, 0], [1, -PHI, 0],
        [0, -1, PHI], [0, 1, PHI], [0, -1, -PHI], [0, 1, -PHI],
        [PHI, 0, -1], [PHI, 0, 1], [-PHI, 0, -1], [-PHI, 0, 1],
    ], dtype=np.float64)
    v *= radius / np.linalg.norm(v[0])
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return v, f


def icosahedron(radius: float = 1.0) -> HalfedgeMesh:
    return HalfedgeMesh(*icosahedron_arrays(radius))


def tetrahedron(edge: float = 1.0) -> HalfedgeMesh:
    """Regular tetrahedron with the given edge length."""
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=np.float64)
    v *= edge / (2.0 * np.sqrt(2.0))
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return HalfedgeMesh(v, f)


def cube(size: float = 1.0) -> HalfedgeMesh:
    """Axis-aligned cube [0, size]^3 split into 12 outward-facing triangles."""
    v = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=np.float64) * size
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    f = []
    for a, b, c, d in quads:
        f += [(a, b, c), (a, c, d)]
    return HalfedgeMesh(v, f)


def midpoint_subdivide(positions, faces):
    """Split every triangle into four at edge midpoints (no smoothing)."""
    positions = [tuple(p) for p in np.asarray(positions, dtype=np.float64)]
    cache: dict[tuple[int, int], int] = {}

    def mid(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in cache:
            pa, pb = positions[a], positions[b]
            positions.append(tuple(0.5 * (x + y) for x, y in zip(pa, pb)))
            cache[key] = len(positions) - 1
        return cache[key]

    out = []
    for a, b, c in np.asarray(faces).tolist():
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        out += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
    return np.array(positions), np.array(out, dtype=np.int64)


def icosphere_arrays(subdivisions: int = 3, radius: float = 1.0):
    v, f = icosahedron_arrays(1.0)
    for _ in range(subdivisions):
        v, f = midpoint_subdivide(v, f)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * radius, f


def icosphere(subdivisions: int = 3, radius: float = 1.0) -> HalfedgeMesh:
    return HalfedgeMesh(*icosphere_arrays(subdivisions, radius))


def _legendre(l: int, t: np.ndarray) -> np.ndarray:
    if l == 1:
        return t
    if l == 2:
        return 0.5 * (3 * t * t - 1)
    if l == 3:
        return 0.5 * (5 * t ** 3 - 3 * t)
    raise ValueError(l)


def potato(subdivisions: int = 4, amplitude: float = 0.15, seed: int = 1) -> HalfedgeMesh:
    """Unit icosphere with a smooth three-term zonal-harmonic radial bump.

    Each term is a Legendre polynomial of degree 2 or 3 around a random axis.
    The weights are normalized to sum to one in magnitude, so the radial
    displacement never exceeds ``amplitude``.
    """
    if not 0 <= amplitude <= 0.15:
        raise ConfigError("potato amplitude must lie in [0, 0.15]")
    if subdivisions < 0:
        raise ConfigError("subdivisions must be >= 0")
    rng = np.random.default_rng(seed)
    axes = rng.normal(size=(3, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    weights = rng.uniform(0.5, 1.0, size=3) * rng.choice([-1.0, 1.0], size=3)
    weights /= np.abs(weights).sum()
    degrees = (2, 2, 3)
    v, f = icosphere_arrays(subdivisions)
    if amplitude > 0:
        bump = sum(w * _legendre(l, v @ ax) for w, l, ax in zip(weights, degrees, axes))
        v = v * (1.0 + amplitude * bump)[:, None]
    return HalfedgeMesh(v, f)


def ellipsoid(subdivisions: int = 4, radii=(1.0, 0.8, 0.6)) -> HalfedgeMesh:
    radii = np.asarray(radii, dtype=np.float64)
    if radii.shape != (3,) or (radii <= 0).any():
        raise ConfigError("ellipsoid needs three positive radii")
    v, f = icosphere_arrays(subdivisions)
    return HalfedgeMesh(v * radii, f)


def gen_testshape(kind: str, seed: int = 1, **params) -> HalfedgeMesh:
    """Dispatch on ``kind`` in {icosphere, ellipsoid, potato}."""
    if kind == "icosphere":
        return icosphere(params.get("subdivisions", 3), params.get("radius", 1.0))
    if kind == "ellipsoid":
        return ellipsoid(params.get("subdivisions", 4), params.get("radii", (1.0, 0.8, 0.6)))
    if kind == "potato":
        return potato(params.get("subdivisions", 4), params.get("amplitude", 0.15), seed)
    raise ConfigError(f"unknown test shape '{kind}'")
