"""Command-line front end (``ct``).

Every subcommand builds a ``RunConfig`` (optionally seeded from ``--config``),
validates it against the shipped schema and writes CSV (17 significant digits)
or JSON. Failures print a JSON diagnostic on stderr; exit codes are 0 on
success, 1 when a numerical check fails and 2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import convolution as conv
from . import helgason as hg
from . import radial as rd
from . import spectral as sp
from .config import ConfigError, RunConfig, parse_profile, report_schema, workers
from .density import build_model, check_hypotheses
from .errors import CTError
from .verify import run_suite, solver_config

CSV_FMT = "%.17g"


class UsageError(CTError):
    """Bad command line (exit code 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_lambda(s) -> complex:
    if isinstance(s, (int, float, complex)):
        return complex(s)
    try:
        return complex(str(s).replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise UsageError(f"cannot parse lambda {s!r}") from exc


def _real_or_complex(z: complex):
    return z.real if z.imag == 0 else z


# ----------------------------------------------------------------------
# output


def _csv_text(header: list[str], rows: np.ndarray) -> str:
    buf = io.StringIO()
    np.savetxt(buf, np.atleast_2d(rows), delimiter=",", fmt=CSV_FMT, header=",".join(header), comments="")
    return buf.getvalue()


def _emit(text: str, path: str | None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, path: str | None = None):
    _emit(json.dumps(obj, indent=2, sort_keys=False) + "\n", path)


# ----------------------------------------------------------------------
# shared pieces


def _table(model, cfg: RunConfig, profiles=(), s_min: float = 4.0, calibrate: bool = True):
    rs = cfg.section("radial")
    s_max = max([s_min] + [p.support_radius for p in profiles])
    table = rd.build_c_table(model, s_max=s_max, lam_max=rs["lambda_max"], cfg=solver_config(cfg),
                             lam_min=rs["lambda_min"])
    if calibrate:
        bumps = [rd.bump(s) for s in rs["calibration_bumps"]]
        rd.calibrate_C0(model, bumps, table, rs["max_calibration_dispersion"])
    return table


def _c_chunk(args):
    desc, lams, scfg = args
    return sp.c_values(build_model(desc), lams, scfg)


def c_values_parallel(model, lams, scfg, n_workers: int | None = None):
    """c on a lambda array, split over CT_THREADS worker processes when > 1."""
    n_workers = workers() if n_workers is None else n_workers
    lams = np.asarray(lams)
    if n_workers <= 1 or len(lams) < 2 * n_workers:
        return sp.c_values(model, lams, scfg)
    parts = np.array_split(lams, n_workers)
    with ProcessPoolExecutor(max_workers=n_workers) as ex:
        res = list(ex.map(_c_chunk, [(model.to_descriptor(), p, scfg) for p in parts]))
    return np.concatenate([r[0] for r in res]), np.concatenate([r[1] for r in res])


def _profile(cfg: RunConfig, key: str = "profile", default: str = "bump:2"):
    return rd.profile_from_spec(parse_profile(cfg.inputs.get(key, default)))


# ----------------------------------------------------------------------
# commands


def cmd_density_check(cfg: RunConfig) -> int:
    model = build_model(cfg.model)
    rep = check_hypotheses(model)
    out = {"model": model.to_descriptor(), **rep.to_dict()}
    _emit_json(out, cfg.outputs.get("out"))
    return 0 if rep.all_pass else 1


def cmd_phi(cfg: RunConfig) -> int:
    model = build_model(cfg.model)
    lam = parse_lambda(cfg.grid.get("lambda", 1.0))
    r = np.linspace(0.0, float(cfg.grid.get("rmax", 10.0)), int(cfg.grid.get("npts", 201)))
    vals = sp.phi(model, _real_or_complex(lam), r, solver_config(cfg))
    _emit(_csv_text(["r", "re_phi", "im_phi"], np.column_stack([r, vals.real, vals.imag])),
          cfg.outputs.get("out"))
    return 0


def cmd_cfn(cfg: RunConfig) -> int:
    model = build_model(cfg.model)
    scfg = solver_config(cfg)
    if "lambda" in cfg.grid:
        lams = np.array([parse_lambda(cfg.grid["lambda"])])
        if lams.imag[0] == 0:
            lams = lams.real
    else:
        lams = np.geomspace(float(cfg.grid.get("lambda_min", 0.01)), float(cfg.grid.get("lambda_max", 100.0)),
                            int(cfg.grid.get("npts", 50)))
    c, _ = c_values_parallel(model, lams, scfg)
    if np.iscomplexobj(lams):
        # off the real axis |c|^-2 is not a Plancherel density
        header = ["re_lambda", "im_lambda", "re_c", "im_c", "plancherel_density"]
        rows = np.column_stack([lams.real, lams.imag, c.real, c.imag, np.full(len(c), np.nan)])
    else:
        header = ["lambda", "re_c", "im_c", "plancherel_density"]
        rows = np.column_stack([lams, c.real, c.imag, np.abs(c) ** -2.0])
    _emit(_csv_text(header, rows), cfg.outputs.get("out"))
    return 0


def cmd_transform(cfg: RunConfig) -> int:
    model = build_model(cfg.model)
    prof = _profile(cfg)
    table = _table(model, cfg, [prof], s_min=prof.support_radius, calibrate=False)
    T = rd.spherical_transform(model, prof, table=table)
    _emit(_csv_text(["lambda", "re_fhat", "im_fhat"], np.column_stack([T.lam, T.values.real, T.values.imag])),
          cfg.outputs.get("out"))
    return 0


def cmd_invert(cfg: RunConfig) -> int:
    model = build_model(cfg.model)
    prof = _profile(cfg)
    table = _table(model, cfg, [prof])
    fh = rd.spherical_transform(model, prof, table=table).values
    r = np.linspace(0.0, float(cfg.grid.get("rmax", prof.support_radius)), int(cfg.grid.get("npts", 101)))
    inv = rd.inverse_transform(model, fh, table, r, cfg.section("radial")["tail_budget"])
    exact = np.real(prof(r))
    err = float(np.max(np.abs(inv.values - exact)))
    _emit(_csv_text(["r", "re_f", "im_f", "exact"],
                    np.column_stack([r, np.real(inv.values), np.imag(inv.values), exact])),
          cfg.outputs.get("out"))
    tol = cfg.tol("roundtrip")
    summary = {"C0": table.C0, "lambda_max": inv.lambda_max, "truncation_bound": inv.truncation_bound,
               "max_error": err, "tolerance": tol, "passed": err <= tol}
    if cfg.outputs.get("out"):
        _emit_json(summary, cfg.outputs.get("report"))
    else:
        sys.stderr.write(json.dumps(summary) + "\n")
    return 0 if err <= tol else 1


def cmd_plancherel(cfg: RunConfig) -> int:
    model = build_model(cfg.model)
    f = _profile(cfg, "f", "bump:2")
    g = _profile(cfg, "g", cfg.inputs.get("f", "bump:2"))
    table = _table(model, cfg, [f, g])
    p = rd.plancherel_radial(model, f, g, table)
    tol = cfg.tol("plancherel")
    out = {"model": model.to_descriptor(), "C0": table.C0, **p.to_dict(), "tolerance": tol,
           "passed": p.relative_gap <= tol}
    _emit_json(out, cfg.outputs.get("out"))
    return 0 if out["passed"] else 1


def _axial_profile(name: str) -> hg.AxialFunction:
    if name == "axial-bump":
        return hg.off_center(rd.gauss_bump(0.5, 2.5), 0.5)
    if name.startswith("radial:"):
        return hg.AxialFunction.radial(rd.profile_from_spec(parse_profile(name.split(":", 1)[1])))
    raise UsageError(f"unknown helgason profile {name!r} (axial-bump or radial:<profile>)")


def cmd_helgason(cfg: RunConfig) -> int:
    model = build_model(cfg.model)
    if model.dimension != 3 or model.name != "hyperbolic":
        raise ConfigError("helgason is implemented on H^3 only (--model h3)")
    hs = cfg.section("helgason")
    grid = hg.HelgasonGrid(hs["n_r"], hs["n_b"], hs["n_phi"], hs["n_psi"])
    f = _axial_profile(cfg.inputs.get("profile", "axial-bump"))
    lam, _ = rd.lambda_grid(3.0, lam_max=float(cfg.grid.get("lambda_max", hs["lambda_max"])))
    T = hg.helgason_forward(f, lam, grid=grid)
    rows = T.to_rows()
    _emit(_csv_text(["lambda", "psi", "re", "im"], rows), cfg.outputs.get("out"))
    return 0


def cmd_convolve(cfg: RunConfig) -> int:
    model = build_model(cfg.model)
    f = _profile(cfg, "f", "bump:1")
    g = _profile(cfg, "g", "bump:2")
    method = cfg.inputs.get("method", "both")
    npts = int(cfg.grid.get("output_points", cfg.section("convolution")["output_points"]))
    cols, header, res = [], ["r"], {}
    if method in ("geometric", "both"):
        if model.dimension != 3 or model.name != "hyperbolic":
            raise ConfigError("geometric convolution is implemented on H^3 only")
        res["geometric"] = conv.convolve_geometric(f, g, n_out=npts)
    if method in ("spectral", "both"):
        table = _table(model, cfg, [f, g, rd.bump(f.support_radius + g.support_radius)])
        res["spectral"] = conv.convolve_spectral(model, f, g, table, n_out=npts)
    first = next(iter(res.values()))
    cols.append(first.profile.r_grid)
    for k, v in res.items():
        header.append(k)
        cols.append(np.real(v.profile.values))
    _emit(_csv_text(header, np.column_stack(cols)), cfg.outputs.get("out"))
    if len(res) == 2:
        gap = float(np.max(np.abs(cols[1] - cols[2])))
        tol = cfg.tol("spectral_vs_geometric")
        sys.stderr.write(json.dumps({"spectral_vs_geometric": gap, "tolerance": tol, "passed": gap <= tol}) + "\n")
        return 0 if gap <= tol else 1
    return 0


def cmd_verify_suite(cfg: RunConfig) -> int:
    report = run_suite(cfg)
    jsonschema.validate(report, report_schema())
    _emit_json(report, cfg.outputs.get("report") or cfg.outputs.get("out"))
    return 0 if report["all_passed"] else 1


COMMANDS = {
    "density-check": cmd_density_check,
    "phi": cmd_phi,
    "cfn": cmd_cfn,
    "transform": cmd_transform,
    "invert": cmd_invert,
    "plancherel": cmd_plancherel,
    "helgason": cmd_helgason,
    "convolve": cmd_convolve,
    "verify-suite": cmd_verify_suite,
}


# ----------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--model", help="h2 | h3 | h4 | hyperbolic:N | dr:P,Q | JSON file or inline JSON")
    common.add_argument("--config", help="RunConfig JSON file; command-line flags override it")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--report", help="JSON report path")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE",
                        help="tolerance override (repeatable)")

    p = _Parser(prog="ct", description="Spherical harmonic analysis on harmonic-manifold density models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("density-check", parents=[common], help="check the density hypotheses")
    s = sub.add_parser("phi", parents=[common], help="spherical function on [0, rmax]")
    s.add_argument("--lambda", dest="lam")
    s.add_argument("--rmax", type=float)
    s.add_argument("--npts", type=int)
    s = sub.add_parser("cfn", parents=[common], help="c-function and Plancherel density")
    s.add_argument("--lambda", dest="lam")
    s.add_argument("--lambda-min", type=float)
    s.add_argument("--lambda-max", type=float)
    s.add_argument("--npts", type=int)
    for name in ("transform", "invert"):
        s = sub.add_parser(name, parents=[common], help=f"radial spherical {name}")
        s.add_argument("--profile", help="bump:S | gauss:SIGMA,S | annulus:A,B")
        s.add_argument("--lambda-max", type=float)
        if name == "invert":
            s.add_argument("--rmax", type=float)
            s.add_argument("--npts", type=int)
    s = sub.add_parser("plancherel", parents=[common], help="radial Plancherel identity")
    s.add_argument("--f")
    s.add_argument("--g")
    s.add_argument("--lambda-max", type=float)
    s = sub.add_parser("helgason", parents=[common], help="non-radial transform on H^3")
    s.add_argument("--profile", help="axial-bump | radial:<profile>")
    s.add_argument("--lambda-max", type=float)
    for k in ("n-r", "n-b", "n-phi", "n-psi"):
        s.add_argument(f"--{k}", type=int)
    s = sub.add_parser("convolve", parents=[common], help="radial convolution f * g")
    s.add_argument("--f")
    s.add_argument("--g")
    s.add_argument("--method", choices=["geometric", "spectral", "both"])
    s.add_argument("--npts", type=int)
    s = sub.add_parser("verify-suite", parents=[common], help="run the verification battery")
    s.add_argument("--quick", action="store_true", default=None)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    if ns.config:
        try:
            raw = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from exc
        if raw.get("command", ns.command) != ns.command:
            raise ConfigError(f"config command {raw['command']!r} does not match {ns.command!r}")
    raw["command"] = ns.command
    if ns.model is not None:
        raw["model"] = ns.model
    raw.setdefault("model", "h3")
    grid = dict(raw.get("grid", {}))
    inputs = dict(raw.get("inputs", {}))
    outputs = dict(raw.get("outputs", {}))
    tols = dict(raw.get("tolerances", {}))
    v = vars(ns)
    if v.get("lam") is not None:
        grid["lambda"] = v["lam"]
    for key in ("rmax", "npts", "lambda_min", "lambda_max", "n_r", "n_b", "n_phi", "n_psi"):
        if v.get(key) is not None:
            grid[key] = v[key]
    if ns.command == "convolve" and v.get("npts") is not None:
        grid["output_points"] = grid.pop("npts")
    for key in ("profile", "f", "g", "method", "quick"):
        if v.get(key) is not None:
            inputs[key] = v[key]
    for key in ("out", "report"):
        if v.get(key) is not None:
            outputs[key] = v[key]
    for item in ns.tol:
        k, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--tol expects KEY=VALUE, got {item!r}")
        try:
            tols[k] = float(val)
        except ValueError as exc:
            raise UsageError(f"tolerance {k} is not a number: {val!r}") from exc
    if ns.seed is not None:
        raw["seed"] = ns.seed
    for key, val in (("grid", grid), ("inputs", inputs), ("outputs", outputs), ("tolerances", tols)):
        if val:
            raw[key] = val
    return RunConfig.from_dict(raw)


def _diagnostic(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def run(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except CTError as exc:
        return _diagnostic(type(exc).__name__, str(exc), exc.exit_code)
    except (ValueError, KeyError) as exc:
        return _diagnostic(type(exc).__name__, str(exc), 2)
    except (ArithmeticError, RuntimeError) as exc:
        return _diagnostic(type(exc).__name__, str(exc), 1)


def main(argv=None):
    try:
        code = run(argv)
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream reader closed early (e.g. `| head`); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)


if __name__ == "__main__":
    main()
