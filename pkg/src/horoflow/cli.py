"""Command line interface: ``horoflow run | verify | export``.

Exit codes: 0 success, 1 configuration or input error, 2 flow terminated
early, 3 inequality violation found by ``verify``.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from .errors import HoroflowError, OutOfBracket
from .flow import FlowConfig, FlowKind, InitialSpec, run
from .hconvex import RadialBody, SupportBody, random_body
from .mesh import write_obj
from .quermass import admissible_pairs, af_gap, af_scale, functionals, invert_reference
from .sphere import GridMode, SphereGrid
from .symfunc import SpeedFunction, SpeedKind

__all__ = ["CONFIG_SCHEMA", "load_config", "build_flow_config", "cmd_run", "cmd_verify", "cmd_export", "main"]

EXIT_OK, EXIT_CONFIG, EXIT_EARLY, EXIT_VIOLATION = 0, 1, 2, 3
VERIFY_TOL = 1e-4

_number = {"type": "number"}
_posint = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["flow", "grid", "initial"],
    "properties": {
        "flow": {
            "type": "object",
            "additionalProperties": False,
            "required": ["flow_kind", "speed", "T_end"],
            "properties": {
                "flow_kind": {"enum": ["VMCF", "VMCF2"]},
                "speed": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": [k.value for k in SpeedKind]},
                        "k": _posint,
                        "l": {"type": "integer", "minimum": 0},
                        "p": _number,
                        "shifted": {"type": "boolean"},
                    },
                },
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "l": {"type": "integer", "minimum": 0},
                "T_end": {"type": "number", "minimum": 0},
                "dt_safety": {"type": "number", "minimum": 0},
                "max_steps": _posint,
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mode"],
            "properties": {
                "mode": {"enum": [m.value for m in GridMode]},
                "n": {"type": "integer", "minimum": 2},
                "N_theta": {"type": "integer", "minimum": 4},
                "N_phi": {"type": "integer", "minimum": 1},
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["sphere", "random", "harmonic"]},
                "r0": {"type": "number", "exclusiveMinimum": 0},
                "amplitude": {"type": "number", "minimum": 0},
                "max_degree": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "degree": {"type": "integer", "minimum": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "cadence_steps": _posint,
                "mesh_every": {"type": "integer", "minimum": 0},
            },
        },
    },
}


class ConfigError(HoroflowError):
    """Invalid or unreadable configuration."""


def load_config(path):
    """Read and schema-validate a run configuration."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from exc
    return doc


def _grid_from(doc):
    mode = GridMode(doc["mode"])
    if mode is GridMode.FULL_S2:
        if doc.get("n", 2) != 2:
            raise ConfigError("FULL_S2 grids need n = 2")
        return SphereGrid.full_s2(doc.get("N_theta", 64), doc.get("N_phi", 128))
    return SphereGrid.axisymmetric(doc.get("n", 2), doc.get("N_theta", 256))


def _speed_from(doc, flow_kind):
    kind = SpeedKind(doc["kind"])
    shifted = doc.get("shifted", flow_kind is FlowKind.VMCF2)
    return SpeedFunction(kind=kind, k=doc.get("k", 1), l=doc.get("l", 0), p=doc.get("p", 1.0), shifted=shifted)


def build_flow_config(doc):
    """Translate a validated config document into a :class:`FlowConfig`."""
    try:
        f = doc["flow"]
        kind = FlowKind(f["flow_kind"])
        grid = _grid_from(doc["grid"])
        out = doc.get("output", {})
        ini = doc["initial"]
        initial = InitialSpec(
            kind=ini["kind"],
            r0=ini.get("r0", 1.0),
            amplitude=ini.get("amplitude", 0.0),
            max_degree=ini.get("max_degree", 4),
            seed=ini.get("seed", 0),
            degree=ini.get("degree", 2),
        )
        return FlowConfig(
            flow_kind=kind,
            speed=_speed_from(f["speed"], kind),
            grid=grid,
            alpha=f.get("alpha", 1.0),
            l=f.get("l", 0),
            T_end=f["T_end"],
            dt_safety=f.get("dt_safety", 0.2),
            initial=initial,
            cadence_steps=out.get("cadence_steps", 100),
            snapshot_every=out.get("mesh_every", 0),
            max_steps=f.get("max_steps", 50_000_000),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def _output_dir(doc, config_path):
    base = Path(config_path).resolve().parent
    return base / doc.get("output", {}).get("dir", "out")


def _fmt(x):
    return format(float(x), ".17g")


def series_header(n):
    return (
        ["t"]
        + [f"W{k}" for k in range(n + 2)]
        + [f"Wt{k}" for k in range(n + 1)]
        + ["phi_bar", "lambda_min", "lambda_max", "pinching", "G_pinch", "sect_min", "osc", "rho_minus", "rho_plus"]
    )


def series_row(rec):
    vals = [rec.t, *rec.W, *rec.Wt, rec.phi_bar, rec.lambda_min, rec.lambda_max, rec.pinching]
    vals += [rec.G_pinch, rec.sect_min, rec.osc, rec.rho_minus, rec.rho_plus]
    return [_fmt(v) for v in vals]


def _state_doc(step, t, body):
    grid = body.grid
    if isinstance(body, SupportBody):
        rep, values = "support", body.u
    else:
        rep, values = "radial", body.rho
    return {
        "step": int(step),
        "t": float(t),
        "grid": {"mode": grid.mode.value, "n": grid.n, "N_theta": grid.n_theta, "N_phi": grid.n_phi},
        "representation": rep,
        "values": [float(v) for v in np.ravel(values)],
    }


def _body_from_state(doc):
    grid = _grid_from(doc["grid"])
    values = np.asarray(doc["values"], dtype=float).reshape(grid.shape)
    cls = SupportBody if doc["representation"] == "support" else RadialBody
    return cls(grid, values)


def _write_json(path, doc):
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _conserved(cfg, rec):
    if cfg.flow_kind is FlowKind.VMCF:
        return "W0", rec.W[0], 0, False
    return f"Wt{cfg.l}", rec.Wt[cfg.l], cfg.l, True


def _summary(cfg, res):
    first, last = res.records[0], res.records[-1]
    name, v0, idx, modified = _conserved(cfg, first)
    v1 = _conserved(cfg, last)[1]
    try:
        r_pred = invert_reference(v0, idx, cfg.grid.n, modified)
    except OutOfBracket:
        r_pred = None
    return {
        "status": res.status,
        "message": res.message,
        "steps": res.steps,
        "t_final": res.t_final,
        "conserved_functional": name,
        "conservation_drift": abs(v1 - v0) / max(abs(v0), 1e-300),
        "fitted_rate": res.fitted_rate,
        "fit_r2": res.fit_r2,
        "r_infinity_predicted": r_pred,
        "r_infinity_observed": 0.5 * (last.rho_minus + last.rho_plus),
        "final_pinching": last.pinching,
        "final_osc": last.osc,
        "tags": list(res.tags),
    }


def cmd_run(config_path):
    """Run a flow from a config file and write its artifacts."""
    doc = load_config(config_path)
    cfg = build_flow_config(doc)
    out = _output_dir(doc, config_path)
    out.mkdir(parents=True, exist_ok=True)
    res = run(cfg)
    with open(out / "series.csv", "w", encoding="ascii", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(series_header(cfg.grid.n))
        for rec in res.records:
            w.writerow(series_row(rec))
    snaps = res.snapshots or [(0, 0.0, res.initial), (res.steps, res.t_final, res.final)]
    for step, t, body in snaps:
        _write_json(out / f"state_{step}.json", _state_doc(step, t, body))
        write_obj(out / f"snap_{step}.obj", body)
    summary = _summary(cfg, res)
    _write_json(out / "summary.json", summary)
    return summary, (EXIT_OK if res.status in ("converged", "completed") else EXIT_EARLY)


def cmd_export(config_path, step, out_path=None):
    """Write the OBJ mesh of a stored snapshot; returns the written path."""
    doc = load_config(config_path)
    out = _output_dir(doc, config_path)
    state = out / f"state_{int(step)}.json"
    if not state.is_file():
        raise ConfigError(f"no snapshot for step {step} in {out}")
    body = _body_from_state(json.loads(state.read_text(encoding="utf-8")))
    target = Path(out_path) if out_path else out / f"snap_{int(step)}.obj"
    write_obj(target, body)
    return target


# ------------------------------------------------------------------------ verify


def _verify_grid(n, n_theta, n_phi):
    if n == 2 and n_phi > 1:
        return SphereGrid.full_s2(n_theta, n_phi)
    return SphereGrid.axisymmetric(n, n_theta)


def _verify_one(args):
    n, n_theta, n_phi, family, body_seed, r0, amplitude, max_degree = args
    grid = _verify_grid(n, n_theta, n_phi)
    body = random_body(grid, body_seed, r0, amplitude, max_degree)
    fv = functionals(body)
    rows = []
    for k, l in admissible_pairs(n, family):
        gap = af_gap(None, k, l, family, fv=fv)
        rows.append((k, l, gap, af_scale(fv, k, family)))
    return rows, fv.residual


def _worker_count():
    env = os.environ.get("HOROFLOW_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def verify_bodies(n, count, seed, family, amplitude=0.1, r0_range=(0.5, 2.0), max_degree=4, n_theta=None, n_phi=None):
    """Sample ``count`` random bodies and return per-body gap rows in sample order."""
    if n_theta is None:
        n_theta = 64 if n == 2 else 256
    if n_phi is None:
        n_phi = 128 if n == 2 else 1
    root = np.random.SeedSequence(seed)
    rng = np.random.default_rng(root)
    radii = rng.uniform(r0_range[0], r0_range[1], size=count)
    seeds = [int(s.generate_state(1)[0]) for s in root.spawn(count)]
    jobs = [(n, n_theta, n_phi, family, s, float(r), amplitude, max_degree) for s, r in zip(seeds, radii)]
    workers = min(_worker_count(), max(1, count))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_verify_one, jobs))
    return [_verify_one(j) for j in jobs]


def verify_report(n, family, results, tol=VERIFY_TOL):
    """Per-pair summary rows ``(k, l, min_gap, min_rel_gap, worst, max_gap, violations)``."""
    report = []
    for i, (k, l) in enumerate(admissible_pairs(n, family)):
        gaps = np.array([res[0][i][2] for res in results])
        scales = np.array([res[0][i][3] for res in results])
        rel = gaps / scales
        worst = int(np.argmin(rel))
        report.append((k, l, float(gaps.min()), float(rel[worst]), worst, float(gaps.max()), int(np.sum(rel < -tol))))
    return report


def cmd_verify(n, count, seed, family, out_dir=".", amplitude=0.1, tol=VERIFY_TOL, **grid_kw):
    """Tabulate Alexandrov-Fenchel gaps over random bodies; returns ``(report, exit code)``."""
    results = verify_bodies(n, count, seed, family, amplitude=amplitude, **grid_kw)
    report = verify_report(n, family, results, tol)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.csv", "w", encoding="ascii", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["family", "n", "k", "l", "count", "min_gap", "min_rel_gap", "worst_sample", "max_gap", "violations"])
        for k, l, gmin, rmin, worst, gmax, bad in report:
            w.writerow([family, n, k, l, count, _fmt(gmin), _fmt(rmin), worst, _fmt(gmax), bad])
    code = EXIT_VIOLATION if any(r[-1] for r in report) else EXIT_OK
    return report, code


# -------------------------------------------------------------------------- main


def _parser():
    p = argparse.ArgumentParser(prog="horoflow", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="integrate a flow from a JSON config")
    r.add_argument("config")
    v = sub.add_parser("verify", help="sweep Alexandrov-Fenchel gaps over random bodies")
    v.add_argument("--n", type=int, default=2)
    v.add_argument("--count", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--family", choices=["AF_W", "AF_Wt", "AF_AREA"], default="AF_Wt")
    v.add_argument("--amplitude", type=float, default=0.1)
    v.add_argument("--tol", type=float, default=VERIFY_TOL)
    v.add_argument("--n-theta", type=int, default=None)
    v.add_argument("--n-phi", type=int, default=None)
    v.add_argument("--out", default=".")
    e = sub.add_parser("export", help="write the OBJ mesh of a stored snapshot")
    e.add_argument("config")
    e.add_argument("--step", type=int, required=True)
    e.add_argument("--out", default=None)
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            summary, code = cmd_run(args.config)
            print(json.dumps(summary, sort_keys=True))
            return code
        if args.command == "verify":
            if args.n < 2 or args.count < 1:
                raise ConfigError("need n >= 2 and count >= 1")
            report, code = cmd_verify(
                args.n,
                args.count,
                args.seed,
                args.family,
                out_dir=args.out,
                amplitude=args.amplitude,
                tol=args.tol,
                n_theta=args.n_theta,
                n_phi=args.n_phi,
            )
            for k, l, gmin, rmin, _, _, bad in report:
                print(f"{args.family} k={k} l={l} min_gap={gmin:.3e} min_rel={rmin:.3e} violations={bad}")
            return code
        print(cmd_export(args.config, args.step, args.out))
        return EXIT_OK
    except (ConfigError, HoroflowError, ValueError) as exc:
        print(f"horoflow: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
