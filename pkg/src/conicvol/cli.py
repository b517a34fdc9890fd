"""Command-line front end.

Every command prints (or writes to ``--output``) either a single record or a
table, as JSON or CSV.  Floats are written with 17 significant digits so that
reports are byte-for-byte reproducible and parse back to the same values.

Exit codes: 0 success; 1 usage error; 2 failed precondition (bad cone,
parameter out of range, ...); 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .cones import cone_from_dict, project
from .errors import CapabilityError, ConicError, DivergenceError
from .intrinsic_volumes import (closed_form_moments, estimate_moments, exact_distribution,
                                sample_squared_projections, sample_V, variance_bounds)
from .normal_approx import (L_and_B, berry_esseen_vc, kolmogorov_distance, sample_W,
                            smoothing_bound, tv_bound_projection)
from .numerics import RngStream
from .phase_transition import (DEFAULT_T_GRID, PHASE_COLUMNS, gaussian_prediction, phase_curve,
                               psi_l1, psi_schatten, recovery_trial, var_lower_l1,
                               var_lower_schatten)
from .solver import SolverConfig

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_NONCONVERGENCE = 0, 1, 2, 3
COMMANDS = ("dim", "ivols", "project", "clt", "bounds", "psi", "phase", "recover")
BOUND_COLUMNS = ("name", "delta", "tau_sq", "sigma_sq", "value", "valid", "vacuous")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


# Formatting ----------------------------------------------------------------------------

def format_value(x: Any) -> str:
    """Text for one CSV cell: floats at 17 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    if x is None:
        return ""
    return str(x)


def emit_csv(rows: Iterable[Sequence | dict], schema: Sequence[str], path=None,
             comment: str | None = None) -> str:
    """Write rows as CSV with a header from ``schema``; returns the text.

    ``rows`` may be sequences (in schema order) or dicts keyed by column.
    An optional ``comment`` line, prefixed with ``#``, precedes the header.
    """
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\r\n")
    w = csv.writer(buf)
    w.writerow(schema)
    for row in rows:
        if isinstance(row, dict):
            row = [row.get(c) for c in schema]
        if len(row) != len(schema):
            raise ValueError(f"row has {len(row)} fields, schema has {len(schema)}")
        w.writerow([format_value(v) for v in row])
    text = buf.getvalue()
    _write(text, path)
    return text


def to_json(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits (non-finite as Infinity/NaN)."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    return json.dumps(str(obj))


def _write(text: str, path) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def _emit(result: dict | list, fmt: str, path, schema=None, meta=None) -> None:
    """Write a record (dict) or table (list of dicts) in the chosen format."""
    meta = meta or {}
    if fmt == "json":
        body = {"meta": meta, "result": result}
        _write(to_json(body) + "\n", path)
        return
    comment = " ".join(f"{k}={format_value(v)}" for k, v in meta.items()) or None
    if isinstance(result, dict):
        flat = {k: v for k, v in result.items() if not isinstance(v, (dict, list, tuple))}
        emit_csv([flat], schema or list(flat), path, comment)
    else:
        emit_csv(result, schema or list(result[0]) if result else schema or [], path, comment)


# Commands ------------------------------------------------------------------------------

def _cone(args):
    if args.cone is None:
        raise UsageError("--cone is required for this command")
    try:
        spec = json.loads(args.cone) if isinstance(args.cone, str) else args.cone
    except json.JSONDecodeError as exc:
        raise UsageError(f"--cone is not valid JSON: {exc}") from exc
    return cone_from_dict(spec), spec


def _stream(args) -> RngStream:
    return RngStream(int(args.seed), int(args.stream_id))


def cmd_dim(args):
    cone, spec = _cone(args)
    est = estimate_moments(cone, args.n, _stream(args), args.workers)
    out = est.as_dict()
    try:
        cf = closed_form_moments(cone)
        out["closed_form"] = {"delta": cf.delta, "tau_sq": cf.tau_sq, "asymptotic": cf.asymptotic}
    except CapabilityError:
        pass
    if est.delta_hat > 0:
        vb = variance_bounds(est)
        out["variance_bounds"] = {"v": vb.v, "b": vb.b, "lower": vb.lower, "upper": vb.upper,
                                  "clamped": vb.clamped}
    return out, None


def cmd_ivols(args):
    cone, spec = _cone(args)
    try:
        ivd = exact_distribution(cone)
        source = "exact"
    except CapabilityError:
        ivd = sample_V(cone, args.n, _stream(args), args.workers)
        source = "sampled"
    rows = [{"j": j, "v_j": v} for j, v in ivd.rows()]
    args._meta["source"] = source
    return rows, ("j", "v_j")


def cmd_project(args):
    cone, spec = _cone(args)
    if args.x is None:
        raise UsageError("--x is required for project")
    x = np.asarray(json.loads(args.x), dtype=float).ravel()
    res = project(cone, x)
    return {"pi_c": res.pi_c.tolist(), "pi_polar": res.pi_polar.tolist(),
            "dist_sq": res.dist_sq, "face_dim": res.face_dim}, None


def cmd_clt(args):
    cone, spec = _cone(args)
    stream = _stream(args)
    out = {}
    try:
        ivd = exact_distribution(cone)
        delta, sigma_sq, tau_sq = ivd.delta, ivd.sigma_sq, ivd.tau_sq
        out["moments_source"] = "exact"
    except CapabilityError:
        ivd = None
        est = estimate_moments(cone, args.n, stream.substream(2), args.workers)
        delta, sigma_sq, tau_sq = est.delta_hat, est.sigma_sq_hat, est.tau_sq_hat
        out["moments_source"] = "estimated"
    G, _ = sample_squared_projections(cone, args.n, stream.substream(0), args.workers)
    out.update(delta=delta, sigma_sq=sigma_sq, tau_sq=tau_sq,
               kolmogorov_G=kolmogorov_distance((G - delta) / math.sqrt(sigma_sq)),
               tv_bound_G=tv_bound_projection(delta, sigma_sq).value)
    if ivd is not None and delta > 0:
        W = sample_W(ivd, args.n, stream.substream(1), args.workers)
        out["kolmogorov_W"] = kolmogorov_distance(W)
        out["tv_bound_W"] = 2.0 * math.sqrt(sigma_sq) / delta
    if tau_sq > 0:
        out["berry_esseen_V"] = berry_esseen_vc(delta, tau_sq).simplified.value
    return out, None


def cmd_bounds(args):
    if args.cone is not None:
        cone, _ = _cone(args)
        cf = closed_form_moments(cone)
        delta, tau_sq, d = cf.delta, cf.tau_sq, cone.dim
    else:
        if args.delta is None or args.tau_sq is None:
            raise UsageError("bounds needs --cone or both --delta and --tau-sq")
        delta, tau_sq, d = args.delta, args.tau_sq, args.d
    sigma_sq = tau_sq + 2.0 * delta
    base = {"delta": delta, "tau_sq": tau_sq, "sigma_sq": sigma_sq}
    rows = []

    def add(name, value, valid=True):
        rows.append({"name": name, **base, "value": value, "valid": valid, "vacuous": value >= 1})

    be = berry_esseen_vc(delta, tau_sq)
    add("berry_esseen_simplified", be.simplified.value, be.simplified.valid)
    add("berry_esseen_full", be.full.value, be.full.valid)
    L, B = L_and_B(delta, tau_sq)
    add("smoothing_L_B", smoothing_bound(L, B))
    tv = tv_bound_projection(delta, sigma_sq, d)
    add("tv_projection", tv.value)
    if "self_dual" in tv.extra:
        add("tv_self_dual", tv.extra["self_dual"])
    pred = gaussian_prediction(delta, tau_sq, 0.0)
    add("recovery_error_budget", pred.error_budget, pred.valid)
    return rows, BOUND_COLUMNS


def cmd_psi(args):
    if args.rho is None:
        raise UsageError("--rho is required for psi")
    if args.nu is None:
        c = psi_l1(args.rho)
        return {"rho": c.rho, "gamma": c.gamma_star, "psi": c.psi, "residual": c.residual,
                "var_lower": var_lower_l1(args.rho)}, None
    c = psi_schatten(args.rho, args.nu)
    return {"rho": c.rho, "nu": c.nu, "y": c.y, "a_minus": c.a_minus, "a_plus": c.a_plus,
            "gamma": c.gamma_star, "psi": c.psi, "residual": c.residual,
            "var_lower": var_lower_schatten(args.rho, args.nu)}, None


def _parse_grid(text) -> list[float]:
    if text is None:
        return list(DEFAULT_T_GRID)
    if isinstance(text, (list, tuple)):
        return [float(t) for t in text]
    if ":" in text:
        lo, hi, step = (float(p) for p in text.split(":"))
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [round(lo + i * step, 12) for i in range(n)]
    return [float(p) for p in text.split(",") if p.strip()]


def _solver_config(args) -> SolverConfig:
    return SolverConfig(max_iterations=args.max_iterations)


def cmd_phase(args):
    curve = phase_curve(args.d, args.s, _parse_grid(args.t_grid), args.trials, _stream(args),
                        args.workers, delta=args.delta, tau_sq=args.tau_sq,
                        n_moments=args.n, config=_solver_config(args))
    args._meta.update(d=args.d, s=args.s, delta=curve.delta, tau_sq=curve.tau_sq)
    rows = [r.as_tuple() for r in curve.rows]
    total = sum(r.trials for r in curve.rows)
    failed = sum(r.failed_to_solve for r in curve.rows)
    if total and failed / total > args.max_unsolved:
        args._exit = EXIT_NONCONVERGENCE
    return rows, PHASE_COLUMNS


def cmd_recover(args):
    if args.m is None:
        raise UsageError("--m is required for recover")
    out = recovery_trial(args.d, args.s, args.m, _stream(args), _solver_config(args))
    if not out.solved:
        args._exit = EXIT_NONCONVERGENCE
    return {"d": args.d, "s": args.s, "m": args.m, "success": out.success,
            "solved": out.solved}, None


HANDLERS = {"dim": cmd_dim, "ivols": cmd_ivols, "project": cmd_project, "clt": cmd_clt,
            "bounds": cmd_bounds, "psi": cmd_psi, "phase": cmd_phase, "recover": cmd_recover}
RANDOMIZED = {"dim", "ivols", "clt", "phase", "recover"}
DEFAULT_FORMAT = {"ivols": "csv", "bounds": "csv", "phase": "csv"}


# Parser --------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="conicvol", description="Conic intrinsic volumes, normal "
                     "approximations and phase transitions.", formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def common(p, n_default=None):
        p.add_argument("--config", default=None, help="JSON file of option values; flags override")
        p.add_argument("--output", default=None, help="output path (stdout if omitted)")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="report format (per-command default)")
        p.add_argument("--seed", type=int, default=0, help="64-bit master seed")
        p.add_argument("--stream-id", type=int, default=0, help="substream selector")
        p.add_argument("--workers", type=int, default=1, help="worker processes")
        if n_default is not None:
            p.add_argument("--n", type=int, default=n_default, help="Monte Carlo sample size")
        p.add_argument("--cone", default=None, help='cone as JSON, e.g. {"kind":"orthant","d":10}')

    p = sub.add_parser("dim", help="estimate delta, sigma^2, tau^2, v, w", formatter_class=fmt)
    common(p, 100000)
    p = sub.add_parser("ivols", help="intrinsic volumes (exact, else sampled)", formatter_class=fmt)
    common(p, 200000)
    p = sub.add_parser("project", help="project a point", formatter_class=fmt)
    common(p)
    p.add_argument("--x", default=None, help="point as a JSON list")
    p = sub.add_parser("clt", help="normal-approximation diagnostics", formatter_class=fmt)
    common(p, 100000)
    p = sub.add_parser("bounds", help="evaluate explicit bounds", formatter_class=fmt)
    common(p)
    p.add_argument("--delta", type=float, default=None, help="statistical dimension")
    p.add_argument("--tau-sq", type=float, default=None, help="conic variance")
    p.add_argument("--d", type=int, default=None, help="ambient dimension (self-dual bound)")
    p = sub.add_parser("psi", help="l1 or Schatten-1 phase curve value", formatter_class=fmt)
    common(p)
    p.add_argument("--rho", type=float, default=None, help="sparsity or rank ratio")
    p.add_argument("--nu", type=float, default=None, help="aspect ratio m/n (Schatten-1)")
    for name, helptext in (("phase", "empirical recovery curve"), ("recover", "one recovery trial")):
        p = sub.add_parser(name, help=helptext, formatter_class=fmt)
        common(p, 20000 if name == "phase" else None)
        p.add_argument("--d", type=int, default=100, help="ambient dimension")
        p.add_argument("--s", type=int, default=10, help="sparsity")
        p.add_argument("--max-iterations", type=int, default=5000, help="solver iteration cap")
        if name == "phase":
            p.add_argument("--trials", type=int, default=200, help="trials per grid point")
            p.add_argument("--t-grid", default="-3:3:0.5", help="lo:hi:step or comma list")
            p.add_argument("--delta", type=float, default=None, help="known delta (skip estimation)")
            p.add_argument("--tau-sq", type=float, default=None, help="known tau^2")
            p.add_argument("--max-unsolved", type=float, default=0.05,
                           help="exit 3 if a larger fraction of trials fails to solve")
        else:
            p.add_argument("--m", type=int, default=None, help="number of measurements")
    return parser


def _load_config(argv: list[str]) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    try:
        with open(known.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return cfg


def _attach_negative_values(argv: list[str]) -> list[str]:
    # argparse reads "--t-grid -1,0,1" as two options; glue such values to their flag
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else ""
        if a in _VALUE_FLAGS and len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == "."):
            out.append(f"{a}={nxt}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


_VALUE_FLAGS = {"--t-grid", "--delta", "--tau-sq", "--rho", "--nu", "--x"}


def run(argv: Sequence[str] | None = None) -> int:
    argv = _attach_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        cfg = _load_config(argv)
        if cfg.get("command") and not any(a in COMMANDS for a in argv):
            argv = [cfg["command"], *argv]
        parser = build_parser()
        if not argv or argv[0] not in COMMANDS:
            if argv and argv[0] in ("-h", "--help", "--version"):
                parser.parse_args(argv)
            parser.print_usage(sys.stderr)
            print(f"conicvol: error: unknown or missing command; choose from {', '.join(COMMANDS)}",
                  file=sys.stderr)
            return EXIT_USAGE
        sub = parser._subparsers._group_actions[0].choices[argv[0]]
        opts = {k.replace("-", "_"): v for k, v in cfg.items() if k != "command"}
        if isinstance(opts.get("cone"), dict):
            opts["cone"] = json.dumps(opts["cone"])
        valid = {a.dest for a in sub._actions}
        unknown = set(opts) - valid
        if unknown:
            raise UsageError(f"unknown config keys for {argv[0]}: {sorted(unknown)}")
        sub.set_defaults(**opts)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    args._meta = {"command": args.command}
    if args.command in RANDOMIZED:
        args._meta.update(seed=args.seed, stream_id=args.stream_id)
    args._exit = EXIT_OK
    try:
        result, schema = HANDLERS[args.command](args)
        fmt = args.format or DEFAULT_FORMAT.get(args.command, "json")
        _emit(result, fmt, args.output, schema, args._meta)
    except UsageError as exc:
        print(f"conicvol {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"conicvol {args.command}: did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (ConicError, ValueError) as exc:
        print(f"conicvol {args.command}: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"conicvol {args.command}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    return args._exit


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
