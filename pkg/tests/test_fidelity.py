import numpy as np
import pytest

from isokit import shapes
from isokit.fidelity import hausdorff, sample_surface
from isokit.mesh import HalfedgeMesh


def test_identical_meshes_zero(ico):
    r = hausdorff(ico, ico.copy())
    assert r.max_distance <= 1e-12 and r.mean_distance <= r.max_distance


def test_scaled_sphere_matches_analytic():
    a = shapes.icosphere(4)
    b = HalfedgeMesh(a.positions * 1.01, a.faces())
    r = hausdorff(a, b, samples_per_triangle=10)
    assert r.max_distance == pytest.approx(0.01, rel=0.1)


@pytest.mark.parametrize("t", [[0.05, 0, 0], [0.02, 0.03, 0.01], [-0.1, 0.2, 0.05]])
def test_translated_cube_exact(cube, t):
    b = HalfedgeMesh(cube.positions + t, cube.faces())
    r = hausdorff(cube, b, samples_per_triangle=3)
    assert r.max_distance == pytest.approx(np.linalg.norm(t), rel=1e-12)
    assert r.max_pct_bb == pytest.approx(np.linalg.norm(t) / np.sqrt(3) * 100, rel=1e-12)


def test_samples_lie_on_surface(small_potato):
    from isokit.spatial import TriangleIndex
    pts = sample_surface(small_potato, 10, seed=3)
    assert len(pts) == 10 * small_potato.n_faces + small_potato.n_vertices
    assert TriangleIndex.from_mesh(small_potato).distance(pts).max() <= 1e-12


def test_denser_sampling_never_lowers_max():
    a = shapes.potato(3, seed=1)
    b = shapes.potato(3, seed=2)
    prev = 0.0
    for spt in (1, 5, 25, 50):
        r = hausdorff(a, b, samples_per_triangle=spt)
        assert r.max_distance >= prev
        assert 0 <= r.mean_distance <= r.max_distance
        prev = r.max_distance


def test_normalized_by_first_argument(cube):
    big = HalfedgeMesh(cube.positions * 2.0, cube.faces())
    r1, r2 = hausdorff(cube, big), hausdorff(big, cube)
    assert r1.max_distance == pytest.approx(r2.max_distance)
    assert r1.max_pct_bb == pytest.approx(2 * r2.max_pct_bb)
