"""OBJ / STL / PLY readers and OBJ / STL writers."""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import MeshIOError, ParseError
from .mesh import HalfedgeMesh

_logger = logging.getLogger(__name__)

WELD_FACTOR = 1e-6
STL_HEADER = b"isokit binary STL".ljust(80, b" ")


def weld_vertices(positions: np.ndarray, faces: np.ndarray, tol: float):
    """Merge vertices closer than ``tol``; each merged group keeps its lowest id.

    Faces that collapse to fewer than three distinct vertices are dropped.
    """
    positions = np.asarray(positions, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    n = len(positions)
    pairs = cKDTree(positions).query_pairs(tol, output_type="ndarray")
    if len(pairs):
        graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
        _, comp = connected_components(graph, directed=False)
    else:
        comp = np.arange(n)
    # representative = first vertex of each component, in id order
    first = {}
    for i, c in enumerate(comp.tolist()):
        first.setdefault(c, i)
    rep = np.array([first[c] for c in comp.tolist()], dtype=np.int64)
    keep = np.unique(rep)
    remap = -np.ones(n, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    new_faces = remap[rep[faces]]
    ok = ((new_faces[:, 0] != new_faces[:, 1]) & (new_faces[:, 1] != new_faces[:, 2])
          & (new_faces[:, 2] != new_faces[:, 0]))
    if not ok.all():
        _logger.warning("welding removed %d collapsed face(s)", int((~ok).sum()))
    return positions[keep], new_faces[ok]


def _read_obj(text: str):
    verts, faces = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        try:
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
                if len(verts[-1]) != 3:
                    raise ValueError("vertex needs 3 coordinates")
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                if len(idx) != 3:
                    raise ValueError(f"only triangles are supported, got {len(idx)} vertices")
                faces.append(idx)
        except ValueError as exc:
            raise ParseError(f"OBJ line {lineno}: {exc}") from exc
    return np.array(verts, dtype=np.float64).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def _read_stl(data: bytes):
    is_binary = len(data) >= 84 and len(data) == 84 + 50 * struct.unpack_from("<I", data, 80)[0]
    if is_binary:
        count = struct.unpack_from("<I", data, 80)[0]
        rec = np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
        arr = np.frombuffer(data, dtype=rec, count=count, offset=84)
        tri = arr["v"].astype(np.float64)
    else:
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError as exc:
            raise ParseError("STL is neither valid binary nor ASCII") from exc
        if not text.lstrip().startswith("solid"):
            raise ParseError("ASCII STL must start with 'solid'")
        coords = []
        for lineno, line in enumerate(text.splitlines(), 1):
            parts = line.split()
            if parts and parts[0] == "vertex":
                try:
                    coords.append([float(x) for x in parts[1:4]])
                except ValueError as exc:
                    raise ParseError(f"STL line {lineno}: {exc}") from exc
        if len(coords) % 3:
            raise ParseError("ASCII STL vertex count is not a multiple of 3")
        tri = np.array(coords, dtype=np.float64).reshape(-1, 3, 3)
    if len(tri) == 0:
        raise ParseError("STL contains no facets")
    positions = tri.reshape(-1, 3)
    faces = np.arange(len(positions)).reshape(-1, 3)
    return positions, faces


def _read_ply(text: str):
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError("missing 'ply' magic")
    n_vert = n_face = None
    i = 1
    while i < len(lines):
        parts = lines[i].split()
        i += 1
        if not parts:
            continue
        if parts[0] == "format" and parts[1] != "ascii":
            raise ParseError("only ASCII PLY is supported")
        if parts[0] == "element" and parts[1] == "vertex":
            n_vert = int(parts[2])
        elif parts[0] == "element" and parts[1] == "face":
            n_face = int(parts[2])
        elif parts[0] == "end_header":
            break
    if n_vert is None or n_face is None:
        raise ParseError("PLY header lacks vertex or face element")
    try:
        body = [ln.split() for ln in lines[i:] if ln.strip()]
        verts = np.array([[float(x) for x in row[:3]] for row in body[:n_vert]])
        faces = []
        for row in body[n_vert:n_vert + n_face]:
            if int(row[0]) != 3:
                raise ParseError("only triangle faces are supported")
            faces.append([int(x) for x in row[1:4]])
    except (ValueError, IndexError) as exc:
        raise ParseError(f"malformed PLY body: {exc}") from exc
    if len(verts) != n_vert or len(faces) != n_face:
        raise ParseError("PLY body shorter than declared in header")
    return verts.reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def _guess_format(path: Path) -> str:
    ext = path.suffix.lower().lstrip(".")
    if ext not in ("obj", "stl", "ply"):
        raise ParseError(f"cannot infer mesh format from '{path.name}'")
    return ext


def read_arrays(path, fmt: str | None = None):
    """Read raw (positions, faces) without welding or validation."""
    path = Path(path)
    fmt = (fmt or _guess_format(path)).lower()
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise MeshIOError(f"cannot read {path}: {exc}") from exc
    if fmt == "stl":
        return _read_stl(data)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not a text file") from exc
    if fmt == "obj":
        return _read_obj(text)
    if fmt == "ply":
        return _read_ply(text)
    raise ParseError(f"unknown mesh format '{fmt}'")


def load_mesh(path, fmt: str | None = None, *, weld_factor: float = WELD_FACTOR) -> HalfedgeMesh:
    """Load, weld and validate a closed manifold triangle mesh.

    Duplicate vertices within ``weld_factor`` times the bounding-box diagonal
    are merged, which is what makes STL input usable at all.

    Raises
    ------
    ParseError
        On malformed files.
    TopologyError
        If the welded mesh is open, non-manifold or non-orientable.
    """
    positions, faces = read_arrays(path, fmt)
    if len(faces) == 0:
        raise ParseError(f"{path}: no faces")
    diag = float(np.linalg.norm(positions.max(axis=0) - positions.min(axis=0)))
    if weld_factor > 0 and diag > 0:
        positions, faces = weld_vertices(positions, faces, weld_factor * diag)
    return HalfedgeMesh.from_arrays(positions, faces)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_mesh(mesh: HalfedgeMesh, path, fmt: str | None = None) -> None:
    """Write ``mesh`` as OBJ, binary STL (``stl``/``stl-binary``) or ``stl-ascii``."""
    path = Path(path)
    if fmt is None:
        fmt = _guess_format(path)
    fmt = fmt.lower()
    positions = mesh.positions
    faces = mesh.faces()
    if len(positions) != mesh.n_vertices:
        # tombstoned slots: write only referenced vertices
        used = np.unique(faces)
        remap = -np.ones(len(positions), dtype=np.int64)
        remap[used] = np.arange(len(used))
        positions, faces = positions[used], remap[faces]
    try:
        if fmt == "obj":
            lines = [f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in positions]
            lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in faces]
            path.write_text("\n".join(lines) + "\n")
        elif fmt in ("stl", "stl-binary"):
            path.write_bytes(stl_bytes(positions, faces))
        elif fmt == "stl-ascii":
            path.write_text(stl_ascii(positions, faces))
        else:
            raise ParseError(f"cannot write format '{fmt}'")
    except OSError as exc:
        raise MeshIOError(f"cannot write {path}: {exc}") from exc


def _facet_normals(tri: np.ndarray) -> np.ndarray:
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    length = np.linalg.norm(n, axis=1, keepdims=True)
    return np.divide(n, length, out=np.zeros_like(n), where=length > 0)


def stl_bytes(positions, faces) -> bytes:
    tri = np.asarray(positions, dtype=np.float64)[np.asarray(faces)]
    rec = np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
    arr = np.zeros(len(tri), dtype=rec)
    arr["n"] = _facet_normals(tri)
    arr["v"] = tri
    return STL_HEADER + struct.pack("<I", len(tri)) + arr.tobytes()


def stl_ascii(positions, faces, name: str = "isokit") -> str:
    tri = np.asarray(positions, dtype=np.float64)[np.asarray(faces)]
    out = [f"solid {name}"]
    for n, t in zip(_facet_normals(tri), tri):
        out.append(f"  facet normal {n[0]:.9e} {n[1]:.9e} {n[2]:.9e}")
        out.append("    outer loop")
        for p in t:
            out.append(f"      vertex {p[0]:.9e} {p[1]:.9e} {p[2]:.9e}")
        out.append("    endloop")
        out.append("  endfacet")
    out.append(f"endsolid {name}")
    return "\n".join(out) + "\n"
