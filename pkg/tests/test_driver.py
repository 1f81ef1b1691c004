import numpy as np
import pytest

from isokit import shapes
from isokit.driver import DecomposeConfig, decompose, report_stats, triangle_errors_pct
from isokit.errors import ConfigError
from isokit.metric import embed_faces, recompute_energy


def test_icosahedron_converges_immediately(ico):
    res = decompose(ico, DecomposeConfig(k=1, threshold_T=0.1))
    assert res.converged
    assert len(res.trace) == 1
    assert res.state.error_max == pytest.approx(0.0, abs=1e-28)


def test_two_class_icosphere_fixpoint():
    m = shapes.icosphere(1)
    res = decompose(m, DecomposeConfig(k=2, threshold_T=0.01))
    assert res.converged and len(res.trace) == 1
    assert res.state.energy == pytest.approx(0.0, abs=1e-24)
    assert np.array_equal(res.mesh.positions, m.positions)


def test_input_not_modified(small_potato):
    before = small_potato.positions.copy()
    decompose(small_potato, DecomposeConfig(k=5, max_iterations=5))
    assert np.array_equal(small_potato.positions, before)


@pytest.fixture(scope="module")
def potato_run(small_potato):
    return decompose(small_potato, DecomposeConfig(k=7, threshold_T=1.5, max_iterations=300,
                                                   audit_every=50))


def test_non_convergence_reported(small_potato):
    res = decompose(small_potato, DecomposeConfig(k=7, threshold_T=0.01, max_iterations=1))
    assert not res.converged
    assert len(res.trace) == 1


def test_trace_consistency(potato_run):
    res = potato_run
    recs = res.trace.records
    assert len(recs) <= 300
    last = recs[-1]
    assert (last.below_threshold_count == last.triangle_count) == res.converged
    err = triangle_errors_pct(res.state, res.mesh.mean_edge_length())
    assert last.below_threshold_count == int((err <= 1.5).sum())
    pts, _ = embed_faces(res.mesh.positions, res.mesh.faces())
    assert res.state.energy == pytest.approx(recompute_energy(pts, res.state.labels,
                                                             res.state.centroids), rel=1e-9)


def test_energy_non_increasing_across_iterations(potato_run):
    e = potato_run.trace.energies
    assert (np.diff(e) <= 1e-9 * e[:-1]).all()


def test_inner_traces_monotone(potato_run):
    for rec in potato_run.trace.records:
        tr = np.array(rec.kmeans_trace)
        assert (np.diff(tr) <= 1e-9 * tr[:-1] + 1e-300).all()
        for before, after in rec.pass_energies.values():
            assert after <= before * (1 + 1e-9)


def test_deterministic(small_potato):
    cfg = DecomposeConfig(k=7, max_iterations=40)
    a = decompose(small_potato, cfg)
    b = decompose(small_potato, DecomposeConfig(k=7, max_iterations=40))
    assert np.array_equal(a.trace.energies, b.trace.energies)
    assert np.array_equal(a.mesh.positions, b.mesh.positions)


def test_report_stats_consistency(small_potato, potato_run, tmp_path):
    res = potato_run
    row = report_stats(res.trace, res.state, (small_potato, small_potato, res.mesh), k=7, T_pct=1.5,
                       samples_per_triangle=5)
    assert row.err_mean_pct == pytest.approx(row.err_mean_abs / row.mean_edge * 100.0, rel=1e-9)
    assert row.T_abs == pytest.approx(0.015 * row.mean_edge, rel=1e-12)
    assert row.iterations == len(res.trace)
    assert row.dH_is_max <= 1e-12
    row.to_csv(tmp_path / "s.csv")
    header = (tmp_path / "s.csv").read_text().splitlines()[0].split(",")
    assert header == ["faces_i", "faces_s", "faces_f", "verts_i", "verts_s", "verts_f", "k",
                      "T_abs", "T_pct", "mean_edge", "err_mean_abs", "err_mean_pct",
                      "dH_is_mean", "dH_is_max", "dH_sf_mean", "dH_sf_max", "dH_if_mean",
                      "dH_if_max", "time_s", "iterations"]
    row.to_csv(tmp_path / "n.csv", include_time=False)
    assert "time_s" not in (tmp_path / "n.csv").read_text()


def test_fixpoint_row(ico):
    res = decompose(ico, DecomposeConfig(k=1, threshold_T=0.1))
    row = report_stats(res.trace, res.state, (ico, ico, res.mesh), k=1, T_pct=0.1)
    assert row.iterations == 1 and len(res.trace.energies) == 1
    assert row.err_mean_pct <= 0.1


def test_config_errors(ico):
    with pytest.raises(ConfigError):
        decompose(ico, DecomposeConfig(k=1, threshold_T=0))
    with pytest.raises(ConfigError):
        decompose(ico, DecomposeConfig(k=1, max_iterations=0))
    with pytest.raises(ConfigError):
        decompose(ico, DecomposeConfig(k=21))
