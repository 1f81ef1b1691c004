import networkx as nx
import numpy as np
import pytest

from isokit import shapes
from isokit.errors import ConfigError
from isokit.mesh import HalfedgeMesh
from isokit.merge import candidate_fans, merge_patches, pair_is_convex
from oracles import max_disjoint_fans


def dual_graph(mesh):
    g = nx.Graph()
    rows = {f: i for i, f in enumerate(mesh.live_faces())}
    g.add_nodes_from(range(mesh.n_faces))
    for h in mesh.edge_halfedges():
        g.add_edge(rows[mesh.he_face[h]], rows[mesh.he_face[mesh.he_twin[h]]])
    return g


def test_icosahedron_fans_match_oracle(ico):
    fans = candidate_fans(ico, 5)
    assert len(fans) == 12
    best = max_disjoint_fans([f for _, f in fans])
    res = merge_patches(ico, None, 5)
    assert best == 3
    assert len(res.groups) == best
    assert res.coverage == pytest.approx(75.0)


def test_pairs_form_a_matching(small_potato):
    res = merge_patches(small_potato, None, 2)
    g = dual_graph(small_potato)
    for a, b in res.groups:
        assert g.has_edge(a, b)
    optimum = len(nx.max_weight_matching(g, maxcardinality=True))
    assert len(res.groups) <= optimum
    assert res.coverage >= 50.0


@pytest.mark.parametrize("size", [2, 5, 6, 7])
def test_partition(size):
    m = shapes.potato(3, seed=2)
    res = merge_patches(m, None, size)
    seen = np.concatenate([list(g) for g in res.groups]) if res.groups else np.array([], int)
    assert len(seen) == len(set(seen.tolist()))
    assert all(len(g) == size for g in res.groups)
    assert len(np.unique(res.face_group)) == len(res.groups) + res.n_singletons
    for gid, g in enumerate(res.groups):
        assert (res.face_group[list(g)] == gid).all()


def test_convexity_guard():
    # a thin spike folds into a reflex quad when unfolded; a regular pair does not
    pos = np.array([[0, 0, 0], [1, 0, 0], [0.5, 0.1, 0.0], [0.5, -0.1, 0.0], [0.5, 0, 1]], float)
    faces = [[0, 1, 2], [1, 0, 3], [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4]]
    m = HalfedgeMesh(pos, faces)
    h = next(h for h in m.edge_halfedges()
             if {m.he_origin[h], m.he_origin[m.he_twin[h]]} == {0, 1})
    assert pair_is_convex(m, h)
    h2 = next(h for h in m.edge_halfedges()
              if {m.he_origin[h], m.he_origin[m.he_twin[h]]} == {0, 2})
    # faces (0,1,2) and (0,2,4): corner angles at vertex 2 sum past pi
    assert not pair_is_convex(m, h2)


def test_class_mixture(ico):
    from isokit.metric import ClusterState
    labels = np.arange(20) % 2
    st = ClusterState(labels, np.zeros((2, 3)), np.zeros(20))
    res = merge_patches(ico, st, 2)
    assert len(res.class_mixture) == len(res.groups)
    for g, mix in zip(res.groups, res.class_mixture):
        assert sum(mix.values()) == len(g)


def test_bad_size(ico):
    with pytest.raises(ConfigError):
        merge_patches(ico, None, 3)
