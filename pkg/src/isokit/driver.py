"""Outer loop: cluster the triangles, stop when every triangle is within the
threshold of its centroid, otherwise remesh and repeat.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .clustering import KMeansConfig, cluster
from .errors import ConfigError
from .mesh import HalfedgeMesh
from .metric import ClusterState, embed_faces, recompute_energy
from .remeshing import (RemeshConfig, improve_by_collapse, improve_by_flip,
                        optimize_valence, translate_vertices)
from .spatial import TriangleIndex

_logger = logging.getLogger(__name__)


@dataclass
class DecomposeConfig:
    k: int
    threshold_T: float = 1.5
    max_iterations: int = 10000
    kmeans: KMeansConfig | None = None
    remesh: RemeshConfig = field(default_factory=RemeshConfig)
    warm_start: bool = True
    audit_every: int = 0

    def __post_init__(self):
        if self.kmeans is None:
            self.kmeans = KMeansConfig(k=self.k)

    def validate(self) -> None:
        if self.threshold_T <= 0:
            raise ConfigError("threshold_T must be > 0")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.kmeans.k != self.k:
            raise ConfigError("kmeans.k must equal k")
        self.kmeans.validate()
        self.remesh.validate()


@dataclass
class IterationRecord:
    iteration: int
    energy: float
    error_max: float
    error_mean: float
    triangle_count: int
    below_threshold_count: int
    kmeans_trace: list = field(default_factory=list, repr=False)
    pass_energies: dict = field(default_factory=dict, repr=False)


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)
    converged: bool = False
    wall_time: float = 0.0

    def __len__(self) -> int:
        return len(self.records)

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "energy", "error_max", "error_mean", "below_threshold_count"])
            for r in self.records:
                w.writerow([r.iteration, repr(r.energy), repr(r.error_max),
                            repr(r.error_mean), r.below_threshold_count])


@dataclass
class DecomposeResult:
    mesh: HalfedgeMesh
    state: ClusterState
    trace: IterationTrace
    mean_edge: float

    @property
    def converged(self) -> bool:
        return self.trace.converged

    def __iter__(self):
        return iter((self.mesh, self.state, self.trace))


def triangle_errors_pct(state: ClusterState, mean_edge: float) -> np.ndarray:
    """Per-triangle error in percent of the mean edge length."""
    return np.sqrt(state.per_triangle_distance) / mean_edge * 100.0


def decompose(mesh_s: HalfedgeMesh, cfg: DecomposeConfig, *, progress=None) -> DecomposeResult:
    """Alternate K-means and remeshing until Error_max <= T.

    The input mesh is not modified.  The threshold ``cfg.threshold_T`` is a
    percentage of the current mean edge length and is compared against the
    per-triangle error in length units.  Hitting ``max_iterations`` is
    reported through ``trace.converged`` rather than raised.
    """
    cfg.validate()
    mesh = mesh_s.copy()
    if mesh.n_faces < cfg.k:
        raise ConfigError(f"k={cfg.k} exceeds the number of faces ({mesh.n_faces})")
    trace = IterationTrace()
    t0 = time.perf_counter()
    centroids = None
    state = None
    mean_edge = mesh.mean_edge_length()
    reference = surface_radius = None
    if cfg.remesh.surface_anchor:
        reference = TriangleIndex.from_mesh(mesh_s)
        surface_radius = cfg.remesh.displacement_band * mean_edge

    for itr in range(1, cfg.max_iterations + 1):
        points, _ = embed_faces(mesh.positions, mesh.faces())
        init = centroids if (cfg.warm_start and centroids is not None) else None
        state = cluster(points, cfg.kmeans, init=init)
        mean_edge = mesh.mean_edge_length()
        err_pct = triangle_errors_pct(state, mean_edge)
        if itr == 1 and (err_pct > cfg.threshold_T).any():
            # Valence flips ignore the clustering; run them before the
            # first recorded solve so later energies compare like with like.
            if optimize_valence(mesh, cfg.remesh.flip_valence_target):
                points, _ = embed_faces(mesh.positions, mesh.faces())
                state = cluster(points, cfg.kmeans)
                mean_edge = mesh.mean_edge_length()
                err_pct = triangle_errors_pct(state, mean_edge)
        centroids = state.centroids
        below = int((err_pct <= cfg.threshold_T).sum())
        rec = IterationRecord(itr, state.energy, state.error_max, state.error_mean,
                              mesh.n_faces, below, kmeans_trace=state.energy_trace)
        trace.records.append(rec)
        if cfg.audit_every and itr % cfg.audit_every == 0:
            oracle = recompute_energy(points, state.labels, state.centroids)
            if not np.isclose(oracle, state.energy, rtol=1e-9, atol=1e-15):
                raise AssertionError(f"energy bookkeeping drift at iteration {itr}")
        if progress is not None:
            progress(rec)
        if below == len(err_pct):
            trace.converged = True
            break
        if itr == cfg.max_iterations:
            break

        if itr == 1:
            if cfg.remesh.collapse_enabled:
                e_before = state.energy
                mesh, state = improve_by_collapse(mesh, state)
                rec.pass_energies["collapse"] = (e_before, state.energy)
            e_before = state.energy
            mesh, state = improve_by_flip(mesh, state)
            rec.pass_energies["flip"] = (e_before, state.energy)
        translate_vertices(mesh, state, cfg.remesh, reference=reference,
                           surface_radius=surface_radius)

    trace.wall_time = time.perf_counter() - t0
    return DecomposeResult(mesh, state, trace, mean_edge)


STATS_COLUMNS = [
    "faces_i", "faces_s", "faces_f", "verts_i", "verts_s", "verts_f", "k",
    "T_abs", "T_pct", "mean_edge", "err_mean_abs", "err_mean_pct",
    "dH_is_mean", "dH_is_max", "dH_sf_mean", "dH_sf_max", "dH_if_mean", "dH_if_max",
    "time_s", "iterations",
]


@dataclass
class StatsRow:
    faces_i: int
    faces_s: int
    faces_f: int
    verts_i: int
    verts_s: int
    verts_f: int
    k: int
    T_abs: float
    T_pct: float
    mean_edge: float
    err_mean_abs: float
    err_mean_pct: float
    dH_is_mean: float
    dH_is_max: float
    dH_sf_mean: float
    dH_sf_max: float
    dH_if_mean: float
    dH_if_max: float
    time_s: float
    iterations: int

    def as_dict(self) -> dict:
        return asdict(self)

    def to_csv(self, path, *, include_time: bool = True) -> None:
        """Write a header and one row.  Without ``include_time`` the file is a
        pure function of config and seed."""
        cols = [c for c in STATS_COLUMNS if include_time or c != "time_s"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            d = self.as_dict()
            w.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in cols])

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2)
            fh.write("\n")


def report_stats(trace: IterationTrace, state: ClusterState, meshes, *, k: int, T_pct: float,
                 samples_per_triangle: int = 25, seed: int = 0, time_s: float | None = None) -> StatsRow:
    """One quantitative-results row for a finished run.

    ``meshes`` is ``(mesh_i, mesh_s, mesh_f)``.  Hausdorff values are in
    percent of the bounding-box diagonal of the first mesh of each pair.
    """
    from .fidelity import hausdorff

    m_i, m_s, m_f = meshes
    mean_edge = m_f.mean_edge_length()
    err = np.sqrt(state.per_triangle_distance)
    err_mean_abs = float(err.mean())
    h_is = hausdorff(m_i, m_s, samples_per_triangle=samples_per_triangle, seed=seed)
    h_sf = hausdorff(m_s, m_f, samples_per_triangle=samples_per_triangle, seed=seed)
    h_if = hausdorff(m_i, m_f, samples_per_triangle=samples_per_triangle, seed=seed)
    return StatsRow(
        faces_i=m_i.n_faces, faces_s=m_s.n_faces, faces_f=m_f.n_faces,
        verts_i=m_i.n_vertices, verts_s=m_s.n_vertices, verts_f=m_f.n_vertices,
        k=k, T_abs=T_pct / 100.0 * mean_edge, T_pct=float(T_pct), mean_edge=mean_edge,
        err_mean_abs=err_mean_abs, err_mean_pct=err_mean_abs / mean_edge * 100.0,
        dH_is_mean=h_is.mean_pct_bb, dH_is_max=h_is.max_pct_bb,
        dH_sf_mean=h_sf.mean_pct_bb, dH_sf_max=h_sf.max_pct_bb,
        dH_if_mean=h_if.mean_pct_bb, dH_if_max=h_if.max_pct_bb,
        time_s=float(trace.wall_time if time_s is None else time_s),
        iterations=len(trace),
    )
