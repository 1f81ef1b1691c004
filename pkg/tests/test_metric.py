import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from isokit.errors import DegenerateError, EmptyClusterError
from isokit.metric import (CurvedPatchPoint, TrianglePoint, centroid, distance, distance_curved,
                           embed, embed_faces, errors, make_state, recompute_energy)

RIGHT = np.array([[0.0, 0, 0], [3, 0, 0], [0, 4, 0]])


def test_embed_right_triangle():
    assert embed(RIGHT) == TrianglePoint(3.0, 4.0, 5.0)


def test_embed_all_vertex_orders():
    for perm in itertools.permutations(range(3)):
        assert embed(RIGHT[list(perm)]) == (3.0, 4.0, 5.0)


def test_embed_equilateral():
    s = 2.5
    tri = s * np.array([[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0]])
    np.testing.assert_allclose(embed(tri), (s, s, s), rtol=1e-15)


def test_embed_degenerate():
    with pytest.raises(DegenerateError):
        embed([[0, 0, 0], [1, 0, 0], [2, 0, 0]])


def test_distance_examples():
    assert distance((3, 4, 5), (3, 4, 5)) == 0.0
    assert distance((3, 4, 5), (3, 4, 6)) == 1.0
    assert distance((1, 1, 1), (2, 2, 2)) == 3.0


def test_distance_curved_examples():
    a = CurvedPatchPoint(0.0, 1.0, 2.0, 3.0)
    assert distance_curved(a, a) == 0.0
    assert distance_curved(a, CurvedPatchPoint(2.0, 1.0, 2.0, 3.0)) == 4.0
    assert distance_curved(a, CurvedPatchPoint(1.0, 1.0, 2.0, 4.0)) == 2.0


def test_centroid_examples():
    assert centroid([(3, 4, 5), (5, 6, 7)]) == (4.0, 5.0, 6.0)
    assert centroid([(3, 4, 5)]) == (3.0, 4.0, 5.0)
    assert centroid([(1, 2, 3), (1, 2, 3), (4, 5, 6)]) == (2.0, 3.0, 4.0)
    with pytest.raises(EmptyClusterError):
        centroid([])


def test_energy_and_errors_hand_check():
    pts = np.array([[3.0, 4, 5], [3, 4, 7]])
    state = make_state(pts, [0, 0], [centroid(pts)])
    assert tuple(state.centroids[0]) == (3.0, 4.0, 6.0)
    assert state.energy == 2.0
    mean_edge = (3 + 4 + 5 + 3 + 4 + 7) / 6
    e = errors(state, mean_edge)
    assert e["error_max_abs"] == 1.0
    # frozen value: 1 / (26/6) * 100
    assert e["error_max_pct"] == pytest.approx(23.076923076923077, rel=1e-12)


def test_congruent_k1_energy_zero(ico):
    pts, _ = embed_faces(ico.positions, ico.faces())
    state = make_state(pts, np.zeros(len(pts), int), [pts.mean(axis=0)])
    assert state.energy == pytest.approx(0.0, abs=1e-28)
    assert state.error_max == pytest.approx(0.0, abs=1e-28)


def test_embed_faces_matches_embed():
    rng = np.random.default_rng(3)
    pos = rng.normal(size=(30, 3))
    faces = rng.choice(30, size=(40, 3), replace=True)
    faces = faces[(faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])]
    pts, ranks = embed_faces(pos, faces)
    for f, p in zip(faces, pts):
        np.testing.assert_allclose(p, embed(pos[f]), rtol=0, atol=0)
    assert (np.sort(ranks, axis=1) == [0, 1, 2]).all()


def test_sqrt_distance_triangle_inequality():
    rng = np.random.default_rng(0)
    a, b, c = rng.uniform(1, 2, size=(3, 500, 3))
    dab = np.sqrt([distance(x, y) for x, y in zip(a, b)])
    dbc = np.sqrt([distance(x, y) for x, y in zip(b, c)])
    dac = np.sqrt([distance(x, y) for x, y in zip(a, c)])
    assert (dac <= dab + dbc + 1e-12).all()


def test_mean_is_energy_optimal():
    rng = np.random.default_rng(1)
    pts = rng.uniform(1, 2, size=(40, 3))
    labels = rng.integers(0, 3, size=40)
    means = np.array([pts[labels == j].mean(axis=0) for j in range(3)])
    e0 = make_state(pts, labels, means).energy
    for _ in range(50):
        moved = means + rng.normal(scale=0.01, size=means.shape)
        assert make_state(pts, labels, moved).energy >= e0 - 1e-12


def test_state_energy_matches_oracle():
    rng = np.random.default_rng(2)
    pts = rng.uniform(1, 2, size=(100, 3))
    labels = rng.integers(0, 4, size=100)
    cents = rng.uniform(1, 2, size=(4, 3))
    state = make_state(pts, labels, cents)
    assert state.energy == pytest.approx(recompute_energy(pts, labels, cents), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_embed_rigid_reflection_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    tri = rng.normal(size=(3, 3))
    base = np.array(embed(tri))
    rot = Rotation.random(random_state=seed).as_matrix()
    moved = tri @ rot.T + rng.normal(size=3) * 10
    mirrored = moved * [-1, 1, 1]
    for t in (moved, mirrored, mirrored[rng.permutation(3)]):
        np.testing.assert_allclose(embed(t), base, rtol=1e-12)
