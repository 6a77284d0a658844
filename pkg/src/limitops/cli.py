"""Command-line front end: run a pipeline on a JSON operator spec and write reports.

Every run writes ``manifest.json`` plus ``report.json`` (or ``report.csv``) into
``--out``.  Output is deterministic for identical arguments.

Exit codes: 0 success / consistent, 1 input error, 2 not-Fredholm, 3 inconclusive.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import tempfile
from importlib import metadata
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .diagnostics import column_support_profile, ghost_profile, propagation_of, quasi_locality_profile
from .errors import ConfigurationError, DomainError, InconclusiveError, OracleUnavailable
from .fredholm import FredholmConfig, extract_classes, fredholm_verdict, oracle_crosscheck
from .galaxy import DEFAULT_CENTERS, DEFAULT_MIN_SURVIVORS, DEFAULT_TOL
from .lowernorm import lower_norm_curve, lower_norm_spectrum, window_search
from .specfile import SpecError, load_spec_text

COMMANDS = ("inspect", "limitops", "lowernorm", "window", "fredholm", "ghost", "crosscheck")
REPORT_SCHEMA_ID = "limitops-report/1"

# one envelope for every command; "result" keys are checked per command
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "command", "operator", "exit_code", "result"],
    "properties": {
        "schema": {"const": REPORT_SCHEMA_ID},
        "command": {"enum": list(COMMANDS)},
        "operator": {"type": "string"},
        "exit_code": {"enum": [0, 2, 3]},
        "result": {"type": "object"},
    },
    "additionalProperties": False,
}

RESULT_KEYS = {
    "inspect": ["space", "propagation", "schur_norm_bound", "norm_bound", "is_band", "growth"],
    "limitops": ["classes", "failures", "spectrum"],
    "lowernorm": ["center", "radii", "values"],
    "window": ["F_radius", "rows"],
    "fredholm": ["verdict", "uniform_bound", "index", "classes", "witnesses", "failures"],
    "ghost": ["ghost", "quasi_locality", "column_support"],
    "crosscheck": ["agreement", "reps", "failures"],
}

MANIFEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "spec", "config", "seed", "versions"],
}


def report_schema(command: str) -> dict:
    s = json.loads(json.dumps(REPORT_SCHEMA))
    s["properties"]["result"]["required"] = RESULT_KEYS[command]
    return s


@dataclass
class RunConfig:
    command: str
    spec_path: str
    output_dir: str
    tol: float = DEFAULT_TOL
    radii: list | None = None
    centers: int = DEFAULT_CENTERS
    seed: int = 0
    grid_size: int = 4096
    tau: float = 1e-3
    mode: str | None = None
    format: str = "json"
    probe_radius: int = 50
    min_survivors: int = DEFAULT_MIN_SURVIVORS
    center: list | None = None
    f_radius: int = 20

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigurationError(f"unknown command {self.command!r}")
        for name in ("tol", "centers", "grid_size", "tau", "probe_radius", "f_radius"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"--{name.replace('_', '-')} must be positive")
        if self.seed < 0:
            raise ConfigurationError("--seed must be nonnegative")
        if self.radii is not None and (not self.radii or min(self.radii) < 0):
            raise ConfigurationError("--radii must be a nonempty range of nonnegative integers")
        if self.format not in ("json", "csv"):
            raise ConfigurationError("--format must be json or csv")

    def fredholm_config(self) -> FredholmConfig:
        return FredholmConfig(centers=self.centers, seed=self.seed, radii=self.radii, tol=self.tol,
                              min_survivors=self.min_survivors, tau=self.tau, mode=self.mode,
                              probe_radius=self.probe_radius, grid_size=self.grid_size)


def parse_radii(text: str) -> list:
    """``a:b:step`` (inclusive of ``b``), ``a:b`` or a comma list."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            a, b = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step <= 0 or b < a:
                raise ValueError
            return list(range(a, b + 1, step))
        return [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad radii {text!r}; expected a:b:step") from None


def jsonable(obj):
    """Plain JSON types; complex numbers become [re, im], non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else v for v in r])
    return buf.getvalue()


# commands: each returns (result dict, exit code, csv text)

def _inspect(op, cfg):
    space = op.space
    res = {"space": space.to_dict(), "propagation": propagation_of(op),
           "schur_norm_bound": op.schur_bound(), "norm_bound": op.norm_bound(), "is_band": op.is_band,
           "growth": {str(r): space.growth_bound(r) for r in (cfg.radii or [1, 2, 4, 8])}}
    rows = [(k, json.dumps(jsonable(v), sort_keys=True) if isinstance(v, dict) else v)
            for k, v in res.items()]
    return res, 0, _csv(["field", "value"], rows)


def _limitops(op, cfg):
    fc = cfg.fredholm_config()
    groups, failures, radii = extract_classes(op, fc)
    reps = [g[0] for g in groups]
    for i, g in enumerate(groups):
        g[0].meta["class_id"] = f"class{i}"
        g[0].meta["members"] = [m.rep_id for m in g]
    spec = lower_norm_spectrum(op, reps, min(fc.probe_radius, radii[-1]))
    res = {"classes": [r.to_dict() for r in reps], "failures": failures, "spectrum": spec, "radii": radii}
    rows = [(e["id"], e["status"], e["achieved_radius"], e["nu"], e["nu_adjoint"]) for e in spec["estimates"]]
    code = 3 if failures or not reps else 0
    return res, code, _csv(["class", "status", "achieved_radius", "nu", "nu_adjoint"], rows)


def _lowernorm(op, cfg):
    radii = cfg.radii or list(range(1, 41))
    center = cfg.center if cfg.center is not None else op.space.basepoint()
    curve = lower_norm_curve(op, center, radii)
    return curve.to_dict(), 0, curve.to_csv()


def _window(op, cfg):
    space = op.space
    center = cfg.center if cfg.center is not None else space.basepoint()
    F = space.ball(center, cfg.f_radius)
    rows = []
    for s in cfg.radii or list(range(2, 11)):
        w = window_search(op, F, s)
        rows.append(w.to_dict())
    res = {"F_radius": cfg.f_radius, "center": list(space.point(center)), "rows": rows}
    return res, 0, _csv(["s", "nu_Y", "nu_F", "gap", "Y_diameter"],
                        [(r["s"], r["nu_Y"], r["nu_F"], r["gap"], r["Y_diameter"]) for r in rows])


def _fredholm(op, cfg, name):
    rep = fredholm_verdict(op, cfg.fredholm_config(), name)
    rows = [(c.class_id, ";".join(c.members), c.nu, c.nu_adjoint, c.decreasing, c.status) for c in rep.classes]
    text = _csv(["class", "members", "nu", "nu_adjoint", "decreasing", "status"], rows)
    text += _csv(["verdict", "uniform_bound", "index"], [(rep.verdict, rep.uniform_bound, rep.index)])
    return rep.to_dict(), rep.exit_code, text


def _ghost(op, cfg):
    g = ghost_profile(op, tol=cfg.tol, seed=cfg.seed)
    eps = [1.0, 0.1, 0.01, 1e-3]
    q = quasi_locality_profile(op, eps, seed=cfg.seed)
    c = column_support_profile(op, eps, seed=cfg.seed)
    res = {"ghost": g.to_dict(), "quasi_locality": q.to_dict(), "column_support": c.to_dict()}
    return res, 0, _csv(["cutoff", "sup_outside"], zip(g.cutoffs, g.sup_outside))


def _crosscheck(op, cfg):
    rep = oracle_crosscheck(op, cfg.fredholm_config())
    rows = [(r["rep"], r["side"], r["phase"], r["entry_error"], r["nu_estimate"], r["symbol_min"], r["nu_ok"])
            for r in rep.reps]
    text = _csv(["rep", "side", "phase", "entry_error", "nu_estimate", "symbol_min", "nu_ok"], rows)
    return rep.to_dict(), 0 if rep.agreement else 3, text


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the exit code. Input errors raise :class:`SpecError` or
    :class:`ConfigurationError`."""
    cfg.validate()
    spec_bytes = Path(cfg.spec_path).read_bytes()
    name, space, op, doc = load_spec_text(spec_bytes.decode("utf-8"))
    name = name or Path(cfg.spec_path).stem
    if cfg.center is not None:
        cfg.center = list(space.point(cfg.center))
    handlers = {"inspect": _inspect, "limitops": _limitops, "lowernorm": _lowernorm, "window": _window,
                "ghost": _ghost, "crosscheck": _crosscheck}
    if cfg.command == "fredholm":
        result, code, text = _fredholm(op, cfg, name)
    else:
        result, code, text = handlers[cfg.command](op, cfg)
    out = Path(cfg.output_dir)
    report = {"schema": REPORT_SCHEMA_ID, "command": cfg.command, "operator": name, "exit_code": code,
              "result": result}
    if cfg.format == "json":
        write_atomic(out / "report.json", dumps(report))
    else:
        write_atomic(out / "report.csv", text)
    manifest = {
        "command": cfg.command,
        "spec": {"path": os.path.basename(cfg.spec_path), "sha256": hashlib.sha256(spec_bytes).hexdigest(),
                 "name": name},
        "config": {k: getattr(cfg, k) for k in ("tol", "radii", "centers", "seed", "grid_size", "tau", "mode",
                                                 "format", "probe_radius", "min_survivors", "center",
                                                 "f_radius")},
        "seed": cfg.seed,
        "rng": "random.Random(seed) for randomized diverging sequences; nothing else is random",
        "horizons": result.get("horizon", {}),
        "versions": {"limitops": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "jsonschema": metadata.version("jsonschema"), "python": platform.python_version()},
        "exit_code": code,
    }
    write_atomic(out / "manifest.json", dumps(manifest))
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="limitops", description="Limit-operator diagnostics for band operators.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--spec", required=True, help="operator spec file (JSON)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL, help="patch agreement tolerance")
    parser.add_argument("--radii", type=parse_radii, default=None,
                        help="a:b:step; radius schedule (limitops, fredholm), curve radii (lowernorm), "
                             "window sizes (window)")
    parser.add_argument("--centers", type=int, default=DEFAULT_CENTERS, help="centers per diverging strategy")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--grid", dest="grid_size", type=int, default=4096, help="symbol grid size")
    parser.add_argument("--tau", type=float, default=1e-3, help="invertibility threshold")
    parser.add_argument("--mode", choices=("ghost", "compact"), default=None,
                        help="ideal to work modulo (default: compact with Property A, else ghost)")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--probe-radius", type=int, default=50)
    parser.add_argument("--min-survivors", type=int, default=DEFAULT_MIN_SURVIVORS)
    parser.add_argument("--center", type=lambda s: [int(v) for v in s.split(",")], default=None,
                        help="comma-separated point (lowernorm, window)")
    parser.add_argument("--f-radius", type=int, default=20, help="radius of F for the window command")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(args.command, args.spec, args.out, args.tol, args.radii, args.centers, args.seed,
                    args.grid_size, args.tau, args.mode, args.format, args.probe_radius, args.min_survivors,
                    args.center, args.f_radius)
    try:
        return run(cfg)
    except (SpecError, ConfigurationError, DomainError, OracleUnavailable, OSError, UnicodeDecodeError) as e:
        print(f"limitops: error: {e}", file=sys.stderr)
        return 1
    except InconclusiveError as e:
        print(f"limitops: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
