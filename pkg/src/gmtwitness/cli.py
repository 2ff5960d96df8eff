"""Command-line runner: one JSON config per run, artifacts written to ``--out``.

Exit status is 0 when every checked bound holds, 1 when a verification
fails and 2 when the configuration is invalid.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arrange import (
    AffineSubspace,
    PlacementSet,
    nikodym_patch,
    rotation_cover,
    snap_scaled,
    snap_value_bound,
    snapped_values,
    tangent_family,
    default_host_family,
)
from .cones import DEFAULT_CONE_CAP, ConeForest, FinenessPolicy, iterate, verify_conditions, witness_lines
from .errors import ConeBudgetExceeded, CoverVerificationFailed, GeometryError
from .export import cone_polygons, forest_svg, read_segments, render_svg
from .hausdorff import full_projection_check, hausdorff_distance
from .measure import (
    Disk,
    area_rows_csv,
    box_dimension_estimate,
    cantor_segments,
    disk_intersection_area,
    dyadic_scales,
    forest_area_table,
    strip_monte_carlo,
    strip_union_area,
)
from .planar import DoubleCone, Point2, Strip

log = logging.getLogger("gmtwitness")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
SUBCOMMANDS = ("construct", "verify", "measure", "nikodym", "snap", "cover", "tangent", "dimension")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: Path = Path("out")
    tol: float = 1e-9
    cone_cap: int = DEFAULT_CONE_CAP

    def get(self, key, default=None, kind=None):
        val = self.params.get(key, default)
        if val is None and default is None and kind is not None:
            raise ConfigError(f"missing required key {key!r}")
        if kind is not None and val is not None:
            try:
                val = kind(val)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {val!r}") from exc
        return val

    def require(self, key, kind=float):
        if key not in self.params:
            raise ConfigError(f"missing required key {key!r}")
        return self.get(key, kind=kind)


def dump_json(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _write(cfg: RunConfig, name: str, text: str) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / name
    path.write_text(text, encoding="utf-8", newline="")
    return path


# ------------------------------------------------------------------ builders
def _cone(cfg: RunConfig) -> DoubleCone:
    vertex = cfg.get("vertex", [0.0, 0.0])
    return DoubleCone(Point2(*map(float, vertex)), cfg.require("phi1"), cfg.require("phi2"))


def _forest(cfg: RunConfig) -> ConeForest:
    if "forest" in cfg.params:
        path = Path(cfg.params["forest"])
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read forest {path}: {exc}") from exc
        return ConeForest.from_dict(doc)
    eps = cfg.get("eps")
    policy = FinenessPolicy(
        m=cfg.get("m", 2, int),
        adaptive=bool(cfg.get("adaptive", True)),
        max_m=cfg.get("max_m", 1 << 12, int),
    )
    return iterate(
        _cone(cfg),
        cfg.require("R"),
        cfg.require("N", int),
        math.inf if eps is None else float(eps),
        policy,
        cfg.cone_cap,
        cfg.tol,
    )


def _subspace(doc) -> AffineSubspace:
    if "anchor" in doc:
        return AffineSubspace(np.array(doc["anchor"], float), np.array(doc.get("basis", []), float))
    return AffineSubspace.through(doc["point"], doc.get("directions", []))


def _placements(cfg: RunConfig, key: str, tag: str, n: int = 2) -> PlacementSet:
    spec = cfg.params.get(key)
    if spec is None:
        raise ConfigError(f"missing required key {key!r}")
    if isinstance(spec, str):
        spec = json.loads(Path(spec).read_text())
    if "random" in spec:
        r = spec["random"]
        rng = np.random.default_rng(cfg.seed)
        box = np.array(r.get("box", [[0, 1]] * n), float)
        count = int(r["count"])
        centers = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((count, box.shape[0]))
        lo, hi = r.get("scales", [1.0, 2.0])
        scales = rng.uniform(lo, hi, count)
        rot = rng.uniform(-math.pi, math.pi, count) if tag != "scaled" else None
        return PlacementSet(centers, scales, rot, tag)
    spec = dict(spec)
    spec.setdefault("tag", tag)
    return PlacementSet.from_dict(spec)


# ------------------------------------------------------------------ subcommands
def cmd_construct(cfg: RunConfig) -> int:
    forest = _forest(cfg)
    rows = forest_area_table(forest, cfg.tol)
    _write(cfg, "forest.json", dump_json(forest.to_dict()))
    _write(cfg, "forest.svg", forest_svg(forest))
    _write(cfg, "areas.csv", area_rows_csv(rows))
    _write(cfg, "fineness.json", dump_json(forest.log))
    ok = all(r.passed for r in rows)
    log.info("construct: %d cones in the last generation, bounds %s", forest.final[0].shape[0], "hold" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(cfg: RunConfig) -> int:
    forest = _forest(cfg)
    eps = cfg.get("eps")
    report = verify_conditions(
        forest,
        samples=cfg.get("samples", 1000, int),
        seed=cfg.seed,
        tol=cfg.tol,
        eps=None if eps is None else float(eps),
    )
    doc = report.to_dict()
    doc["counterexample"] = report.surjectivity_counterexample
    _write(cfg, "report.json", dump_json(doc))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_measure(cfg: RunConfig) -> int:
    forest = _forest(cfg)
    strips = cfg.get("strips") or [[forest.top - forest.R, forest.top]]
    mc = cfg.get("mc_samples", 0, int)
    rows = []
    for k, (lo, hi) in enumerate(strips):
        strip = Strip(float(lo), float(hi))
        area = strip_union_area(forest, strip)
        row = [float(lo), float(hi), area]
        if mc:
            est, se = strip_monte_carlo(forest, strip, mc, cfg.seed + k)
            row += [est, se, int(abs(est - area) <= 4 * se + cfg.tol)]
        rows.append(row)
    header = ["strip_lo", "strip_hi", "area"] + (["mc_estimate", "mc_stderr", "pass"] if mc else [])
    _write(cfg, "areas.csv", write_csv(rows, header))
    ok = all(r[-1] for r in rows) if mc else True
    disks = cfg.get("disks") or []
    drows = []
    for k, d in enumerate(disks):
        B = Disk(tuple(map(float, d["center"])), float(d["radius"]))
        rep = disk_intersection_area(forest, B, cfg.get("disk_samples", 200_000, int), cfg.seed + k)
        drows.append([B.center[0], B.center[1], B.radius, rep.estimate, rep.stderr, rep.strip_bound, int(rep.disjoint)])
    if disks:
        header = ["center_x", "center_y", "radius", "estimate", "stderr", "strip_bound", "disjoint"]
        _write(cfg, "disks.csv", write_csv(drows, header))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_nikodym(cfg: RunConfig) -> int:
    disk = cfg.require("disk", dict)
    B = Disk(tuple(map(float, disk["center"])), float(disk["radius"]))
    patch = nikodym_patch(
        cfg.require("x0", lambda v: tuple(map(float, v))),
        cfg.require("r0"),
        cfg.get("theta0", 0.0, float),
        B,
        cfg.require("eta"),
        cfg.require("eps"),
        n_samples=cfg.get("mc_samples", 1_000_000, int),
        seed=cfg.seed,
        cone_cap=cfg.cone_cap,
        grid=cfg.get("grid", 20, int),
        dimension=cfg.get("dimension", 2, int),
        tol=cfg.tol,
    )
    _write(cfg, "patch.json", dump_json(patch.to_dict()))
    X, Rr = patch.neighborhood.grid(cfg.get("grid", 20, int))
    idx, theta, offset, ok = witness_lines(patch.forest, X, Rr, cfg.tol)
    rows = [[float(x[0]), float(x[1]), float(r), int(i), float(t), float(o), int(k)] for x, r, i, t, o, k in zip(X, Rr, idx, theta, offset, ok)]
    _write(cfg, "witness_grid.csv", write_csv(rows, ["x1", "x2", "r", "cone", "theta", "offset", "ok"]))
    V, P = patch.forest.final
    R = patch.forest.R
    c = patch.frame.disk.center
    span = max(3 * R, abs(c[0]) + 2 * patch.frame.disk.radius, abs(patch.frame.x0[0]) + 1)
    viewport = ((-span, -R - 0.5), (span, max(patch.frame.x0[1], patch.frame.puncture[1]) + 0.5))
    circle = [(c[0] + patch.frame.disk.radius * math.cos(t), c[1] + patch.frame.disk.radius * math.sin(t)) for t in np.linspace(0, 2 * math.pi, 64)]
    svg = render_svg(
        cone_polygons(V, P, viewport[0][1], viewport[1][1]),
        segments=list(zip(circle, circle[1:] + circle[:1])),
        points=[tuple(patch.frame.x0), tuple(patch.frame.puncture)],
        viewport=viewport,
        note="normalized frame",
    )
    _write(cfg, "patch.svg", svg)
    ok_all = patch.witnesses["all_ok"] and patch.disk_area.upper < patch.eps
    return EXIT_OK if ok_all else EXIT_FAIL


def cmd_snap(cfg: RunConfig) -> int:
    V = _subspace(cfg.require("V", dict))
    eps = cfg.require("eps")
    L = _placements(cfg, "placements", "scaled", V.n)
    K = snap_scaled(L, V, eps)
    dH = hausdorff_distance(K.cloud(), L.cloud())
    full = full_projection_check(K, L.centers, 0.0)
    values = snapped_values(K, V)
    bound = snap_value_bound(L, V, eps)
    _write(cfg, "snapped.json", dump_json(K.to_dict()))
    rows = [
        ["hausdorff", dH, eps, int(dH <= eps + cfg.tol)],
        ["distinct_values", float(len(np.unique(np.round(values / eps)))), float(bound), int(len(np.unique(np.round(values / eps))) <= bound)],
        ["full_projection", float(full), 1.0, int(full)],
    ]
    _write(cfg, "verification.csv", write_csv(rows, ["check", "measured", "bound", "pass"]))
    return EXIT_OK if all(r[-1] for r in rows) else EXIT_FAIL


def cmd_cover(cfg: RunConfig) -> int:
    V = _subspace(cfg.require("V", dict))
    box = cfg.get("C_box", [[0.0, 0.0], [1.0, 1.0]])
    I = cfg.get("I", [1.0, 2.0])
    try:
        fam = rotation_cover(V, box, I, cfg.require("eps"), cfg.get("samples", 10_000, int), cfg.seed, cfg.tol)
    except CoverVerificationFailed as exc:
        _write(cfg, "verification.csv", write_csv([["cover", 0.0, 1.0, 0]], ["check", "measured", "bound", "pass"]))
        _write(cfg, "counterexample.json", dump_json({"counterexample": exc.counterexample}))
        return EXIT_FAIL
    _write(cfg, "cover.json", dump_json(fam.to_dict()))
    rep = fam.report
    rows = [
        ["max_move", rep["max_move"], fam.eps, int(rep["max_move"] <= fam.eps)],
        ["max_line_error", rep["max_line_error"], cfg.tol, int(rep["max_line_error"] <= cfg.tol)],
    ]
    _write(cfg, "verification.csv", write_csv(rows, ["check", "measured", "bound", "pass"]))
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def cmd_tangent(cfg: RunConfig) -> int:
    n = cfg.require("n", int)
    k = cfg.require("k", int)
    box = cfg.get("box", [[0.0, 1.0]] * n)
    count = cfg.get("count", 100, int)
    r_lo, r_hi = cfg.get("radii", [0.5, 1.0])
    rng = np.random.default_rng(cfg.seed)
    box_a = np.array(box, float)
    xs = box_a[:, 0] + (box_a[:, 1] - box_a[:, 0]) * rng.random((count, n))
    rs = rng.uniform(r_lo, r_hi, count)
    hosts = default_host_family(n, k, box, cfg.get("hosts", 64, int))
    planes = tangent_family(list(zip(xs, rs)), k, n, hosts)
    err = np.array([abs(float(p.distance(x)) - r) for (p, _), x, r in zip(planes, xs, rs)])
    inside = np.array([float(np.max(hosts[i].distance(np.vstack([p.anchor, p.anchor + p.basis])))) if p.k else float(hosts[i].distance(p.anchor)) for p, i in planes])
    doc = {
        "n": n,
        "k": k,
        "hosts": [W.to_dict() for W in hosts],
        "planes": [{"host": i, **p.to_dict()} for p, i in planes],
    }
    _write(cfg, "tangent.json", dump_json(doc))
    tol = cfg.params.get("distance_tol", 1e-12)
    rows = [
        ["distance_error", float(err.max()), tol, int(err.max() <= tol)],
        ["host_containment", float(inside.max()), tol, int(inside.max() <= tol)],
    ]
    _write(cfg, "verification.csv", write_csv(rows, ["check", "measured", "bound", "pass"]))
    return EXIT_OK if all(r[-1] for r in rows) else EXIT_FAIL


def cmd_dimension(cfg: RunConfig) -> int:
    k_lo, k_hi = cfg.get("levels", [4, 10])
    scales = dyadic_scales(int(k_lo), int(k_hi))
    points = segments = None
    if "cantor" in cfg.params:
        segments = cantor_segments(int(cfg.params["cantor"]))
    elif "segments_file" in cfg.params:
        segments = read_segments(Path(cfg.params["segments_file"]).read_text())
    elif "segments" in cfg.params:
        segments = np.array(cfg.params["segments"], float).reshape(-1, 2, 2)
    if "points" in cfg.params:
        points = np.array(cfg.params["points"], float).reshape(-1, 2)
    series = box_dimension_estimate(points, segments, scales)
    text = series.to_csv()
    _write(cfg, "boxcount.csv", text)
    _write(cfg, "fit.json", dump_json({"slope": series.slope, "intercept": series.intercept, "residual": series.residual}))
    expect = cfg.params.get("expect")
    if expect is not None:
        ok = abs(series.slope - float(expect["slope"])) <= float(expect.get("tol", 0.05))
        return EXIT_OK if ok else EXIT_FAIL
    return EXIT_OK


COMMANDS = {
    "construct": cmd_construct,
    "verify": cmd_verify,
    "measure": cmd_measure,
    "nikodym": cmd_nikodym,
    "snap": cmd_snap,
    "cover": cmd_cover,
    "tangent": cmd_tangent,
    "dimension": cmd_dimension,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmtwitness", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON document with the run parameters")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path)
        p.add_argument("--tol", type=float)
        p.add_argument("--cone-cap", type=int, dest="cone_cap")
        p.add_argument("--set", action="append", default=[], metavar="KEY=JSON", help="override a config key")
    return parser


def load_config(args) -> RunConfig:
    params = {}
    if args.config is not None:
        try:
            params = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(params, dict):
            raise ConfigError("the config must be a JSON object")
    for item in args.set:
        key, _, raw = item.partition("=")
        try:
            params[key] = json.loads(raw)
        except json.JSONDecodeError:
            params[key] = raw
    cfg = RunConfig(args.subcommand, params)
    for key, default in (("seed", 0), ("out", "out"), ("tol", 1e-9), ("cone_cap", DEFAULT_CONE_CAP)):
        flag = getattr(args, key)
        val = flag if flag is not None else params.get(key.replace("_", "-"), params.get(key, default))
        setattr(cfg, key, val)
    try:
        cfg.seed = int(cfg.seed)
        cfg.tol = float(cfg.tol)
        cfg.cone_cap = int(cfg.cone_cap)
        cfg.out = Path(cfg.out)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.seed < 0 or not cfg.tol >= 0 or cfg.cone_cap < 1:
        raise ConfigError("seed, tol and cone cap must be nonnegative")
    return cfg


def run(subcommand: str, cfg: RunConfig) -> int:
    try:
        return COMMANDS[subcommand](cfg)
    except (ConfigError, KeyError, TypeError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (ConeBudgetExceeded, CoverVerificationFailed) as exc:
        log.error("verification failed: %s", exc)
        return EXIT_FAIL
    except GeometryError as exc:
        log.error("invalid parameters: %s", exc)
        return EXIT_CONFIG


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    return run(args.subcommand, cfg)


if __name__ == "__main__":
    sys.exit(main())
