import numpy as np

from isokit import shapes
from isokit.spatial import TriangleIndex, closest_point_on_triangles

from oracles import point_triangle_distance_dense


def test_closest_point_regions():
    a, b, c = np.array([0.0, 0, 0]), np.array([1.0, 0, 0]), np.array([0.0, 1, 0])
    q = np.array([[0.2, 0.2, 1.0], [-1, -1, 0], [2, -0.5, 0], [0.5, -1, 0], [1, 1, 0]])
    out = closest_point_on_triangles(q, *(np.tile(x, (len(q), 1)) for x in (a, b, c)))
    np.testing.assert_allclose(out, [[0.2, 0.2, 0], [0, 0, 0], [1, 0, 0], [0.5, 0, 0], [0.5, 0.5, 0]],
                               atol=1e-15)


def test_against_dense_sampling():
    rng = np.random.default_rng(0)
    tri = rng.normal(size=(20, 3, 3))
    q = rng.normal(size=(20, 3)) * 2
    out = closest_point_on_triangles(q, tri[:, 0], tri[:, 1], tri[:, 2])
    d = np.linalg.norm(out - q, axis=1)
    for i in range(20):
        dense = point_triangle_distance_dense(q[i], *tri[i], n=120)
        assert d[i] <= dense + 1e-12
        assert dense - d[i] <= 0.02 * np.linalg.norm(tri[i, 1] - tri[i, 0]) + 0.02


def test_index_matches_brute_force():
    m = shapes.potato(3, seed=2)
    idx = TriangleIndex.from_mesh(m)
    rng = np.random.default_rng(1)
    q = rng.normal(size=(300, 3))
    _, dist, _ = idx.closest(q)
    tri = m.positions[m.faces()]
    for i in range(0, 300, 7):
        qq = np.tile(q[i], (len(tri), 1))
        brute = np.linalg.norm(closest_point_on_triangles(qq, tri[:, 0], tri[:, 1], tri[:, 2]) - qq,
                               axis=1).min()
        assert abs(dist[i] - brute) <= 1e-12


def test_vertices_have_zero_distance(ico):
    idx = TriangleIndex.from_mesh(ico)
    assert idx.distance(ico.positions).max() <= 1e-15
