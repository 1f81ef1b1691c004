"""Command-line front end.

``isokit run <config>`` executes the full pipeline described by a JSON or
TOML file, ``isokit gen`` writes synthetic test shapes, ``isokit hausdorff``
compares two meshes and ``isokit stats`` prints the stats row of a run.

Exit codes: 0 success (converged), 2 finished without convergence, 1 error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

_logger = logging.getLogger("isokit")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _apply_thread_limit(threads: int | None) -> None:
    """Bound BLAS/OpenMP threads; only effective before numpy is loaded."""
    if threads is None:
        env = os.environ.get("ISOKIT_THREADS")
        threads = int(env) if env else None
    if threads is not None:
        if threads < 1:
            raise SystemExit("ISOKIT_THREADS must be >= 1")
        for var in _THREAD_VARS:
            os.environ[var] = str(threads)


# ----------------------------------------------------------------------
# configuration


@dataclass
class CurvedConfig:
    enabled: bool = False
    levels: int = 3
    k: int = 6
    T: float = 7.5
    seed: int = 0
    restarts: int = 8


@dataclass
class RunConfig:
    """Everything one ``isokit run`` needs; built from a config file."""

    source: dict  # {"path": ..., "format": ...} or {"kind": ..., "seed": ..., params}
    output: Path
    decompose: object
    simplify: object | None = None
    fab: object | None = None
    curved: CurvedConfig = field(default_factory=CurvedConfig)
    merge_group_size: int | None = None
    mesh_format: str = "obj"
    samples_per_triangle: int = 25
    seed: int = 0

    @property
    def mode(self) -> str:
        return "curved" if self.curved.enabled else "planar"


def _read_config_file(path: Path) -> dict:
    from .errors import ConfigError, MeshIOError

    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise MeshIOError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            return json.loads(raw.decode("utf-8"))
        try:
            import tomllib as toml
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as toml
        return toml.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: cannot parse config: {exc}") from exc


def _build(cls, data, where: str):
    from .errors import ConfigError

    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a table, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(unknown)}")
    try:
        obj = cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    if hasattr(obj, "validate"):
        try:
            obj.validate()
        except ConfigError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    return obj


def parse_config(data: dict, base_dir: Path = Path("."), name: str = "<config>") -> RunConfig:
    """Turn a parsed config mapping into a validated :class:`RunConfig`.

    Relative paths are resolved against ``base_dir``; ``name`` prefixes
    error messages.
    """
    from .clustering import KMeansConfig
    from .driver import DecomposeConfig
    from .errors import ConfigError
    from .fabrication import FabConfig
    from .remeshing import RemeshConfig
    from .simplification import SimplifyConfig

    where = name
    data = dict(data)
    src = data.pop("input", None)
    if src is None:
        raise ConfigError(f"{where}: missing field 'input'")
    if isinstance(src, str):
        src = {"path": src}
    if not isinstance(src, dict) or ("path" in src) == ("kind" in src):
        raise ConfigError(f"{where}: 'input' must be a path or a table with either 'path' or 'kind'")
    src = dict(src)
    if "path" in src:
        src["path"] = str(base_dir / src["path"])

    output = data.pop("output", None)
    if output is None:
        raise ConfigError(f"{where}: missing field 'output'")

    dec = dict(data.pop("decompose", {}) or {})
    if "k" not in dec:
        raise ConfigError(f"{where}: [decompose] needs 'k'")
    km = dec.pop("kmeans", {}) or {}
    rm = dec.pop("remesh", {}) or {}
    km = _build(KMeansConfig, {"k": dec["k"], **km}, f"{where}: [decompose.kmeans]")
    rm = _build(RemeshConfig, rm, f"{where}: [decompose.remesh]")
    decompose = _build(DecomposeConfig, {**dec, "kmeans": km, "remesh": rm}, f"{where}: [decompose]")

    simp = data.pop("simplify", None)
    simplify = _build(SimplifyConfig, simp, f"{where}: [simplify]") if simp else None
    fab_data = data.pop("fab", None)
    fab = _build(FabConfig, fab_data, f"{where}: [fab]") if fab_data else None
    curved = _build(CurvedConfig, data.pop("curved", {}) or {}, f"{where}: [curved]")
    if curved.enabled and not 1 <= curved.levels <= 4:
        raise ConfigError(f"{where}: [curved] levels must be in 1..4")

    merge = data.pop("merge", None)
    group = None
    if merge is not None:
        group = merge.get("group_size") if isinstance(merge, dict) else merge
        from .merge import GROUP_SIZES
        if group not in GROUP_SIZES:
            raise ConfigError(f"{where}: [merge] group_size must be one of {GROUP_SIZES}")

    rc = RunConfig(source=src, output=base_dir / output, decompose=decompose,
                   simplify=simplify, fab=fab, curved=curved, merge_group_size=group)
    for key in ("mesh_format", "samples_per_triangle", "seed"):
        if key in data:
            setattr(rc, key, data.pop(key))
    if data:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(sorted(data))}")
    if rc.mesh_format not in ("obj", "stl", "stl-ascii"):
        raise ConfigError(f"{where}: mesh_format must be obj, stl or stl-ascii")
    return rc


def load_config(path) -> RunConfig:
    path = Path(path)
    data = _read_config_file(path)
    return parse_config(data, path.parent, str(path))


# ----------------------------------------------------------------------
# pipeline


def _load_input(src: dict):
    from .meshio import load_mesh
    from .shapes import gen_testshape

    if "path" in src:
        return load_mesh(src["path"], src.get("format"))
    params = {k: v for k, v in src.items() if k not in ("kind", "seed")}
    return gen_testshape(src["kind"], seed=src.get("seed", 1), **params)


def write_histogram(path, state, mean_edge: float) -> None:
    """Per-triangle error table: triangle id, class, error_abs, error_pct."""
    import numpy as np

    err = np.sqrt(state.per_triangle_distance)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["triangle", "class", "error_abs", "error_pct"])
        for i, (lab, e) in enumerate(zip(state.labels, err)):
            w.writerow([i, int(lab), repr(float(e)), repr(float(e / mean_edge * 100.0))])


def _write_curved(path, patches, classification) -> None:
    import numpy as np

    st = classification.state
    err = np.sqrt(st.per_triangle_distance)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["face", "class", "w", "w_length", "error_abs", "error_pct"])
        for p, lab, e in zip(patches, st.labels, err):
            w.writerow([p.parent_face, int(lab), repr(p.w), repr(p.w_length), repr(float(e)),
                        repr(float(e / classification.mean_edge * 100.0))])


def run_pipeline(rc: RunConfig, *, progress=None) -> int:
    """Execute one configured run and write its artifacts.  Returns the exit code."""
    from . import fabrication as fab
    from .driver import decompose, report_stats
    from .meshio import save_mesh
    from .simplification import simplify

    out = rc.output
    out.mkdir(parents=True, exist_ok=True)
    ext = "obj" if rc.mesh_format == "obj" else "stl"

    mesh_i = _load_input(rc.source)
    mesh_s = simplify(mesh_i, rc.simplify) if rc.simplify else mesh_i.copy()
    save_mesh(mesh_s, out / f"mesh_s.{ext}", rc.mesh_format)
    result = decompose(mesh_s, rc.decompose, progress=progress)
    mesh_f, state, trace = result
    save_mesh(mesh_f, out / f"mesh_f.{ext}", rc.mesh_format)

    row = report_stats(trace, state, (mesh_i, mesh_s, mesh_f), k=rc.decompose.k,
                       T_pct=rc.decompose.threshold_T,
                       samples_per_triangle=rc.samples_per_triangle, seed=rc.seed)
    row.to_csv(out / "stats.csv", include_time=False)
    row.to_json(out / "stats.json")
    trace.to_csv(out / "trace.csv")
    write_histogram(out / "histogram.csv", state, mesh_f.mean_edge_length())
    if not trace.converged:
        _logger.warning("no convergence after %d iterations (Error_max %.4g%%)", len(trace),
                        (state.error_max ** 0.5) / mesh_f.mean_edge_length() * 100.0)

    groups = None
    if rc.merge_group_size is not None:
        from .merge import merge_patches
        merged = merge_patches(mesh_f, state, rc.merge_group_size)
        groups = merged.face_group
        with open(out / "merge.json", "w") as fh:
            json.dump({"group_size": merged.group_size, "coverage_pct": merged.coverage,
                       "groups": [list(map(int, g)) for g in merged.groups],
                       "class_mixture": [{str(k): v for k, v in m.items()}
                                         for m in merged.class_mixture]}, fh, indent=2)
            fh.write("\n")

    if rc.curved.enabled:
        from .subdivision import classify_curved, curved_patches
        cc = rc.curved
        sub, patches = curved_patches(mesh_f, cc.levels)
        classification = classify_curved(patches, cc.k, cc.T, cc.seed, restarts=cc.restarts)
        _write_curved(out / "curved.csv", patches, classification)
        with open(out / "curved.json", "w") as fh:
            json.dump({"k": cc.k, "T_pct": cc.T, "levels": cc.levels,
                       "error_max_pct": classification.error_max_pct,
                       "within_threshold": classification.within_threshold}, fh, indent=2)
            fh.write("\n")

    if rc.fab is not None:
        connector = fab.make_hinge(rc.fab)
        if rc.curved.enabled:
            normals = sub.vertex_normals()
            parts = [fab.cut_holes_curved(
                fab.thicken_curved_class(patches, classification, c, rc.fab, normals), rc.fab)
                for c in range(classification.state.k)
                if (classification.state.labels == c).any()]
        else:
            parts = [fab.cut_holes_planar(p, rc.fab) for p in fab.thicken_all(mesh_f, state, rc.fab)]
        fab.export_parts(parts, connector, out / "parts", groups=groups)

    return EXIT_OK if trace.converged else EXIT_NOT_CONVERGED


# ----------------------------------------------------------------------
# subcommands


def _cmd_run(args) -> int:
    rc = load_config(args.config)

    def progress(rec):
        if args.progress and (rec.iteration == 1 or rec.iteration % 100 == 0):
            print(f"\riteration {rec.iteration}: {rec.below_threshold_count}/"
                  f"{rec.triangle_count} within T", end="", file=sys.stderr, flush=True)

    code = run_pipeline(rc, progress=progress)
    if args.progress:
        print(file=sys.stderr)
    print(f"{'converged' if code == EXIT_OK else 'not converged'}; outputs in {rc.output}")
    return code


def _cmd_gen(args) -> int:
    from .meshio import save_mesh
    from .shapes import gen_testshape

    params = {}
    if args.subdivisions is not None:
        params["subdivisions"] = args.subdivisions
    if args.amplitude is not None:
        params["amplitude"] = args.amplitude
    mesh = gen_testshape(args.kind, seed=args.seed, **params)
    save_mesh(mesh, args.output, args.format)
    print(f"wrote {args.output}: {mesh.n_vertices} vertices, {mesh.n_faces} faces")
    return EXIT_OK


def _cmd_hausdorff(args) -> int:
    from .fidelity import hausdorff
    from .meshio import load_mesh

    res = hausdorff(load_mesh(args.a), load_mesh(args.b),
                    samples_per_triangle=args.samples, seed=args.seed)
    print(json.dumps({"mean": res.mean_distance, "max": res.max_distance,
                      "mean_pct_bb": res.mean_pct_bb, "max_pct_bb": res.max_pct_bb,
                      "samples": res.sample_count}, indent=2))
    return EXIT_OK


def _cmd_stats(args) -> int:
    from .errors import MeshIOError

    path = Path(args.run_dir) / "stats.json"
    try:
        row = json.loads(path.read_text())
    except OSError as exc:
        raise MeshIOError(f"cannot read {path}: {exc}") from exc
    width = max(len(k) for k in row)
    for key, val in row.items():
        print(f"{key:<{width}}  {val:.6g}" if isinstance(val, float) else f"{key:<{width}}  {val}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isokit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="bound numeric worker threads (default: $ISOKIT_THREADS)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the pipeline from a JSON or TOML config")
    r.add_argument("config")
    r.add_argument("--progress", action="store_true", help="print a progress line to stderr")
    r.set_defaults(func=_cmd_run)

    g = sub.add_parser("gen", help="write a synthetic test shape")
    g.add_argument("kind", choices=("icosphere", "ellipsoid", "potato"))
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--subdivisions", type=int, default=None)
    g.add_argument("--amplitude", type=float, default=None)
    g.add_argument("--format", default=None, help="obj, stl or stl-ascii (default: from suffix)")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=_cmd_gen)

    h = sub.add_parser("hausdorff", help="symmetric sampled Hausdorff distance of two meshes")
    h.add_argument("a")
    h.add_argument("b")
    h.add_argument("--samples", type=int, default=25, help="samples per triangle")
    h.add_argument("--seed", type=int, default=0)
    h.set_defaults(func=_cmd_hausdorff)

    s = sub.add_parser("stats", help="print the stats row of a finished run")
    s.add_argument("run_dir")
    s.set_defaults(func=_cmd_stats)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _apply_thread_limit(args.threads)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    from .errors import IsokitError

    try:
        return args.func(args)
    except (IsokitError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
