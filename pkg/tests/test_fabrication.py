import json

import numpy as np
import pytest

from isokit import shapes
from isokit.driver import DecomposeConfig, decompose
from isokit.errors import ConfigError, OverlapError
from isokit.fabrication import (FabConfig, canonical_triangle, cut_holes_curved, cut_holes_planar,
                                export_parts, hinge_count, holes_congruent, make_hinge,
                                reassembly_residuals, thicken_all, thicken_class,
                                thicken_curved_class)
from isokit.mesh import HalfedgeMesh
from isokit.meshio import load_mesh, stl_bytes
from isokit.metric import ClusterState, embed_faces
from isokit.solids import self_intersections
from isokit.subdivision import CurvedClassification, classify_curved, curved_patches

CFG = FabConfig(0.05, 0.06, 0.02, 0.04, clearance=0.002, rod_diameter=0.008)
SMALL = FabConfig(0.02, 0.03, 0.008, 0.02, clearance=0.001, rod_diameter=0.003)


def single_class_state(mesh, face):
    """Class 0 holds only ``face``; class 1 holds the rest."""
    pts, _ = embed_faces(mesh.positions, mesh.faces())
    labels = np.ones(mesh.n_faces, dtype=np.int64)
    labels[face] = 0
    cents = np.array([pts[face], pts[labels == 1].mean(axis=0)])
    d = ((pts - cents[labels]) ** 2).sum(axis=1)
    return ClusterState(labels, cents, d, float(d.sum()), float(d.max()), float(d.mean()))


@pytest.fixture(scope="module")
def flat_cube():
    p, f = shapes.cube().positions, shapes.cube().faces()
    for _ in range(3):
        p, f = shapes.midpoint_subdivide(p, f)
    return HalfedgeMesh(p, f)


@pytest.fixture(scope="module")
def flat_face(flat_cube):
    """A face in the middle of a cube side, surrounded by a flat neighborhood."""
    p = flat_cube.positions
    c = p[flat_cube.faces()].mean(axis=1)
    center = 0.5 * (p.min(axis=0) + p.max(axis=0))
    face_center = center.copy()
    face_center[2] = p[:, 2].max()
    return int(np.argmin(np.linalg.norm(c - face_center, axis=1)))


@pytest.fixture(scope="module")
def run():
    m = shapes.potato(2, 0.15, seed=1)
    return decompose(m, DecomposeConfig(k=7, max_iterations=30))


@pytest.fixture(scope="module")
def parts(run):
    return [cut_holes_planar(p, CFG) for p in thicken_all(run.mesh, run.state, CFG)]


def test_canonical_triangle_edges():
    a, b, c = canonical_triangle((3.0, 4.0, 5.0))
    assert np.linalg.norm(b - a) == pytest.approx(5.0)
    assert np.linalg.norm(c - b) == pytest.approx(3.0)
    assert np.linalg.norm(a - c) == pytest.approx(4.0)
    assert c[1] > 0 and a[2] == b[2] == c[2] == 0
    with pytest.raises(ConfigError):
        canonical_triangle((1.0, 1.0, 3.0))


def test_planar_class_is_a_straight_prism(flat_cube, flat_face):
    st = single_class_state(flat_cube, flat_face)
    patch = thicken_class(flat_cube, st, 0, SMALL)
    assert np.allclose(patch.normals, [0, 0, 1], atol=1e-12)
    assert np.allclose(patch.outer_triangle - patch.inner_triangle, [0, 0, SMALL.thickness], atol=1e-12)
    # one instance: its own vertex normals, in its own frame
    pl = patch.placements[0]
    vn = flat_cube.vertex_normals()[list(pl.corners)] @ pl.rotation
    assert np.allclose(patch.normals, vn / np.linalg.norm(vn, axis=1, keepdims=True), atol=1e-12)


def test_convex_class_grows_outward(ico):
    pts, _ = embed_faces(ico.positions, ico.faces())
    st = ClusterState(np.zeros(20, dtype=np.int64), pts[:1].copy(), np.zeros(20))
    patch = thicken_class(ico, st, 0, FabConfig(0.1, 0.12, 0.03, 0.08, 0.005, 0.01))
    inner, outer = patch.inner_triangle, patch.outer_triangle
    for i in range(3):
        j = (i + 1) % 3
        assert np.linalg.norm(outer[j] - outer[i]) > np.linalg.norm(inner[j] - inner[i])
    assert patch.count == 20
    assert reassembly_residuals(ico, patch).max() <= 1e-12


def test_solids_closed_and_clean(parts):
    for p in parts:
        s = p.solid
        s.audit()
        assert s.euler_characteristic() == 2
        assert s.volume() > 0
        assert len(self_intersections(s.positions, s.faces())) == 0
        assert len(p.holes) == 3
        assert holes_congruent(p)


def test_placements_are_rigid_and_flag_reflections(parts):
    for p in parts:
        for pl in p.placements:
            r = pl.rotation
            assert np.allclose(r.T @ r, np.eye(3), atol=1e-9)
            assert np.sign(np.linalg.det(r)) == (-1 if pl.reflected else 1)


def test_reassembly_within_class_bound(run, parts):
    for p in parts:
        res = reassembly_residuals(run.mesh, p)
        assert len(res) == p.count
        assert res.max() <= p.error_bound + 1e-9


def test_same_input_gives_identical_solid(run):
    a = cut_holes_planar(thicken_class(run.mesh, run.state, 2, CFG), CFG)
    b = cut_holes_planar(thicken_class(run.mesh, run.state, 2, CFG), CFG)
    assert stl_bytes(a.solid.positions, a.solid.faces()) == stl_bytes(b.solid.positions, b.solid.faces())


def test_oversized_hole_rejected(run):
    patch = thicken_class(run.mesh, run.state, 0, CFG)
    with pytest.raises(OverlapError):
        cut_holes_planar(patch, FabConfig(0.05, 0.06, 0.06, 0.04, 0.002, 0.008))
    with pytest.raises(OverlapError):
        cut_holes_planar(patch, FabConfig(0.05, 0.3, 0.02, 0.04, 0.002, 0.008))


def test_curved_flat_limit_matches_planar(flat_cube, flat_face):
    sub, patches = curved_patches(flat_cube, 3)
    assert patches[flat_face].w <= 1e-12
    desc = np.array([p.descriptor for p in patches])
    labels = np.ones(len(patches), dtype=np.int64)
    labels[flat_face] = 0
    cents = np.array([desc[flat_face], desc[labels == 1].mean(axis=0)])
    d = ((desc - cents[labels]) ** 2).sum(axis=1)
    cls = CurvedClassification(ClusterState(labels, cents, d), 1.0, 1.0, 0.0)
    patch = thicken_curved_class(patches, cls, 0, SMALL, sub.vertex_normals())
    assert len(patch.inner_faces) == 64
    curved = cut_holes_curved(patch, SMALL)
    planar = cut_holes_planar(patch, SMALL)
    for hc, hp in zip(curved.holes, planar.holes):
        assert np.abs(hc.box_corners - hp.box_corners).max() <= 1e-6
        # centered between the layers
        assert hc.center[2] == pytest.approx(SMALL.w_h, abs=1e-9)
    assert curved.solid.euler_characteristic() == 2


def test_curved_symmetric_patch_holes_congruent(ico):
    sub, patches = curved_patches(ico, 3)
    cls = classify_curved(patches, 1, 1.0)
    cfg = FabConfig(0.1, 0.12, 0.03, 0.08, 0.005, 0.01)
    patch = cut_holes_curved(thicken_curved_class(patches, cls, 0, cfg, sub.vertex_normals()), cfg)
    assert holes_congruent(patch)
    assert patch.solid.euler_characteristic() == 2
    assert len(self_intersections(patch.solid.positions, patch.solid.faces())) == 0
    assert reassembly_residuals(sub, patch).max() <= 1e-9


def test_hinge_dimensions():
    h = make_hinge(FabConfig(1, 6, 4, 8, clearance=0.15))
    assert h.tongue == pytest.approx((5.7, 3.7, 7.7))
    assert h.fits()
    for half in (h.half_a, h.half_b):
        half.audit()
        assert half.volume() > 0
        assert len(self_intersections(half.positions, half.faces())) == 0
    with pytest.raises(ConfigError):
        make_hinge(FabConfig(1, 6, 4, 8, clearance=3))


def test_hinge_halves_congruent():
    h = make_hinge(FabConfig(1, 6, 4, 8, clearance=0.15))
    wt = h.tongue[0]
    mapped = h.half_a.positions * [-1, -1, 1] + [wt, 0, 0]
    key = lambda p: np.round(p, 9).tolist()
    assert sorted(map(key, mapped)) == sorted(map(key, h.half_b.positions))
    assert h.half_a.volume() == pytest.approx(h.half_b.volume())


def test_hinge_count():
    assert hinge_count(116) == 174
    assert hinge_count(20) == 30
    with pytest.raises(ConfigError):
        hinge_count(7)


def test_export_manifest(run, parts, tmp_path):
    manifest = export_parts(parts, make_hinge(CFG), tmp_path)
    assert manifest["total_parts"] == run.mesh.n_faces
    assert manifest["hinge"]["count"] == 3 * run.mesh.n_faces // 2
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk == manifest
    assert sum(len(c["transforms"]) for c in on_disk["classes"]) == run.mesh.n_faces
    for c in on_disk["classes"]:
        solid = load_mesh(tmp_path / c["stl"])
        assert solid.euler_characteristic() == 2
    for name in ("hinge_a.stl", "hinge_b.stl"):
        assert (tmp_path / name).stat().st_size > 84
