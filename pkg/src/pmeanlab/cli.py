"""Command line front end.

Subcommands: ``pmean``, ``verify``, ``oracle-check``, ``solve`` and
``compare-means``.  Every run echoes its resolved configuration into the
output (JSON document or ``#`` header lines of the CSV), so identical
configurations produce byte-identical output.

Exit codes: 0 pass, 1 tolerance failure, 2 configuration error, 3 numerical
failure, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    DEFAULT_EPSILONS,
    ELLIPTIC_ORDERS,
    HEAT_ORDERS,
    StencilDomainError,
    amvp_residual_sweep,
    default_rule,
    verify_elliptic,
    verify_parabolic,
)
from .compare import compare_on_field, continuity_contrast, monotonicity_search
from .fields import FIELD_NAMES, make_field
from .measure import TruncationError, UnsupportedDimensionError
from .oracles import OracleRangeError, SuiteSettings, run_oracle_suite
from .plaplace import ZeroGradientError
from .pmean import Exponent, p_mean_ball, p_mean_heat, p_mean_sphere
from .solver import GridProblem, residual_report, solve

__all__ = ["main", "build_parser", "EXIT_PASS", "EXIT_FAIL", "EXIT_CONFIG", "EXIT_NUMERIC",
           "EXIT_NONCONVERGED", "SCHEMA_PATH"]

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_NONCONVERGED = 4

SCHEMA_PATH = Path(__file__).with_name("output.schema.json")


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# value parsers


def _exponent(text: str) -> Exponent:
    try:
        return Exponent.coerce(text)
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _plain(value):
    """JSON-friendly copy of a configuration value."""
    if isinstance(value, Exponent):
        return str(value)
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def _clean(obj):
    """Replace non-finite floats and numpy scalars so the JSON stays standard."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--config", default=None, help="key = value file; flags override it")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pmeanlab", description="Variational p-means and their asymptotics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("pmean", help="p-mean of a catalog field at a point")
    _common(p)
    p.add_argument("--field", default="quadratic", help=f"one of {', '.join(FIELD_NAMES)}")
    p.add_argument("--p", type=_exponent, default=Exponent.two())
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--x", type=_floats, default=None)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--geometry", choices=("Ball", "Sphere", "HeatBall"), default="Ball")
    p.add_argument("--order", type=int, default=None)

    p = sub.add_parser("verify", help="asymptotic expansion check")
    _common(p)
    p.add_argument("--kind", choices=("elliptic", "parabolic", "amvp"), default="elliptic")
    p.add_argument("--field", default="quadratic")
    p.add_argument("--p", type=_exponent, default=Exponent.two())
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--x", type=_floats, default=None, help="default (1/2, 1/4, ...)")
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--geometry", choices=("Ball", "Sphere", "HeatBall"), default="Ball")
    p.add_argument("--eps-sweep", type=_floats, default=DEFAULT_EPSILONS)
    p.add_argument("--order", type=int, default=None,
                   help="fixed rule order; omitted, the order is escalated until delta settles")
    p.add_argument("--model", choices=("even", "linear"), default="even")
    p.add_argument("--rel-tol", type=float, default=1e-3)
    p.add_argument("--abs-tol", type=float, default=None,
                   help="bound on |delta_0| for amvp (default 1e-2) and for a zero "
                        "theoretical value (default 1e-3)")
    p.add_argument("--coefficient-scale", type=float, default=1.0,
                   help="multiply the theoretical value (negative tests)")

    p = sub.add_parser("oracle-check", help="quadrature against the closed forms")
    _common(p)
    p.add_argument("--dimensions", type=_ints, default=(2, 3))
    p.add_argument("--exponents", type=_floats, default=(1.5, 2.0, 3.0, 4.0))
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--order", type=int, default=16)
    p.add_argument("--heat-order", type=int, default=32)
    p.add_argument("--heat-radial-nodes", type=int, default=16)

    p = sub.add_parser("solve", help="p-harmonious grid solver")
    _common(p)
    p.add_argument("--problem", choices=("square", "annulus", "aronsson", "constant", "affine"),
                   default="square")
    p.add_argument("--p", type=_exponent, default=Exponent.two())
    p.add_argument("--h", type=float, default=1.0 / 32.0)
    p.add_argument("--eps", type=float, default=None, help="default 4h")
    p.add_argument("--max-iterations", type=int, default=10000)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--accelerate", type=_bool, default=True)
    p.add_argument("--error-bound", type=float, default=None)

    p = sub.add_parser("compare-means", help="variational versus explicit means")
    _common(p)
    p.add_argument("--n", type=int, default=200, help="power in the continuity contrast")
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--p", type=float, default=4.0)
    p.add_argument("--pairs", type=int, default=10000)
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--extra-p", type=_floats, default=(1.5,),
                   help="additional exponents searched for explicit-mean violations")
    p.add_argument("--fields", default="linear,quadratic,normsq,harmonic")
    p.add_argument("--eps", type=float, default=0.1)
    return parser


def _read_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    out = {}
    for num, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{num}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config(sub: argparse.ArgumentParser, values: dict) -> None:
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        if key not in actions or key in ("config", "help"):
            raise ConfigError(f"unknown config key {key!r}")
        act = actions[key]
        try:
            value = act.type(raw) if act.type else raw
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from exc
        if act.choices is not None and value not in act.choices:
            raise ConfigError(f"{key} must be one of {list(act.choices)}")
        defaults[key] = value
    sub.set_defaults(**defaults)


def parse_config(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise ConfigError("a subcommand is required")
    if args.config:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        _apply_config(sub, _read_config(args.config))
        args = parser.parse_args(argv)
    _resolve_defaults(args)
    return args


def _resolve_defaults(args: argparse.Namespace) -> None:
    """Fill defaults that depend on other options, so the echo is complete."""
    if args.command in ("pmean", "verify"):
        if args.x is None:
            x = np.zeros(args.N) if args.command == "pmean" else 0.5 ** np.arange(1, args.N + 1)
            args.x = tuple(float(v) for v in x)
    if args.command == "pmean" and args.order is None:
        args.order = HEAT_ORDERS[0] if args.geometry == "HeatBall" else ELLIPTIC_ORDERS[0]
    if args.command == "verify" and args.abs_tol is None:
        args.abs_tol = 1e-2 if args.kind == "amvp" else 1e-3
    if args.command == "solve":
        if args.eps is None:
            args.eps = 4.0 * args.h
        if args.error_bound is None:
            args.error_bound = _DEFAULT_BOUNDS[args.problem]


_DEFAULT_BOUNDS = {"square": 2e-2, "annulus": 5e-2, "aronsson": 5e-2, "constant": 1e-12, "affine": 1e-6}


def resolved_config(args: argparse.Namespace) -> dict:
    skip = {"out", "config", "format"}
    return {k: _plain(v) for k, v in sorted(vars(args).items()) if k not in skip}


# ---------------------------------------------------------------------------
# output


def _emit(args, config: dict, exit_code: int, result: dict, rows: list | None) -> None:
    if args.format == "json":
        doc = {"command": args.command, "version": __version__, "config": config,
               "exit_code": exit_code, "status": _STATUS[exit_code], "result": _clean(result)}
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        buf.write(f"# command={args.command}\n")
        for k, v in config.items():
            if k == "command":
                continue
            buf.write(f"# {k}={json.dumps(v)}\n")
        buf.write(f"# exit_code={exit_code}\n")
        w = csv.writer(buf, lineterminator="\n")
        rows = rows or []
        if rows:
            header = list(rows[0].keys())
            w.writerow(header)
            for r in rows:
                w.writerow([_csv_cell(r.get(h)) for h in header])
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(_clean(v), sort_keys=True)
    return "" if v is None else v


_STATUS = {EXIT_PASS: "pass", EXIT_FAIL: "fail", EXIT_CONFIG: "config-error",
           EXIT_NUMERIC: "numerical-failure", EXIT_NONCONVERGED: "not-converged"}


# ---------------------------------------------------------------------------
# subcommands


def _point(args, n):
    x = np.zeros(n) if args.x is None else np.asarray(args.x, dtype=float)
    if x.shape != (n,):
        raise ConfigError(f"--x needs {n} coordinates")
    return x


def cmd_pmean(args):
    n = args.N
    parabolic = args.geometry == "HeatBall"
    field = make_field(args.field, n, p=args.p.p, parabolic=parabolic)
    if field.parabolic and not parabolic:
        raise ConfigError(f"field {args.field!r} is time dependent; use --geometry HeatBall")
    x = _point(args, n)
    if args.eps <= 0:
        raise ConfigError("--eps must be positive")
    rule = default_rule(args.geometry, n, args.p, args.order)
    axis = "auto" if _has_gradient(field, x, args.t if parabolic else None) else None
    if args.geometry == "Ball":
        res = p_mean_ball(field, x, args.eps, args.p, rule, axis=axis)
    elif args.geometry == "Sphere":
        res = p_mean_sphere(field, x, args.eps, args.p, rule, axis=axis)
    else:
        res = p_mean_heat(field, x, args.t, args.eps, args.p, rule, axis=axis)
    if not math.isfinite(res.mean):
        return EXIT_NUMERIC, {"error": "non-finite mean"}, None
    result = {"mean": res.mean, "residual": res.residual, "iterations": res.iterations,
              "bracket_width": res.bracket_width, "rule_order": rule.order}
    return EXIT_PASS, result, [result]


def _has_gradient(field, x, t):
    try:
        g = field.gradient(x, t) if field.parabolic else field.gradient(x)
    except (ValueError, ZeroDivisionError):
        return False
    return bool(np.all(np.isfinite(g)) and np.linalg.norm(g) > 0)


def cmd_verify(args):
    n = args.N
    x = _point(args, n)
    if args.kind == "parabolic" or (args.kind == "amvp" and args.geometry == "HeatBall"):
        field = make_field(args.field, n, p=args.p.p, parabolic=True)
        if not field.parabolic:
            raise ConfigError(f"field {args.field!r} has no time dependent form")
    else:
        field = make_field(args.field, n, p=args.p.p)
        if field.parabolic:
            raise ConfigError(f"field {args.field!r} is time dependent; use --kind parabolic")
    rule = None
    if args.order is not None:
        geom = "HeatBall" if args.kind == "parabolic" else args.geometry
        rule = default_rule(geom, n, args.p, args.order)
    if args.kind == "elliptic":
        if args.geometry == "HeatBall":
            raise ConfigError("elliptic checks need Ball or Sphere")
        rep = verify_elliptic(field, x, args.p, args.geometry, rule, args.eps_sweep, args.model)
    elif args.kind == "parabolic":
        rep = verify_parabolic(field, x, args.t, args.p, rule, args.eps_sweep, args.model)
    else:
        t = args.t if args.geometry == "HeatBall" else None
        rep = amvp_residual_sweep(field, x, args.p, args.geometry, rule, args.eps_sweep, t, args.model)
    result = rep.to_dict()
    theory = rep.theoretical * args.coefficient_scale
    if args.kind == "amvp":
        ok = abs(rep.fitted_limit) <= args.abs_tol and rep.monotone
    else:
        abs_err = abs(rep.fitted_limit - theory)
        rel_err = abs_err / max(abs(theory), 1e-12)
        result.update(theoretical=theory, abs_error=abs_err, rel_error=rel_err)
        # a relative error is meaningless against 0; fall back to |delta_0|
        ok = abs_err <= args.abs_tol if theory == 0.0 else rel_err <= args.rel_tol
    rows = [{"row": "sweep", "epsilon": e, "delta": d} for e, d in zip(rep.epsilons, rep.deltas)]
    rows.append({"row": "summary", "fitted_limit": rep.fitted_limit,
                 "theoretical": result["theoretical"], "rel_error": result["rel_error"]})
    for r in rows:
        for k in ("row", "epsilon", "delta", "fitted_limit", "theoretical", "rel_error"):
            r.setdefault(k, None)
    return (EXIT_PASS if ok else EXIT_FAIL), result, rows


def cmd_oracle_check(args):
    settings = SuiteSettings(dimensions=tuple(args.dimensions), exponents=tuple(args.exponents),
                             pairs=args.pairs, seed=args.seed, order=args.order,
                             heat_order=args.heat_order, heat_radial_nodes=args.heat_radial_nodes)
    suite = run_oracle_suite(settings)
    rows = []
    for r in suite.reports:
        prm = r.parameters
        rows.append({"formula": r.formula_id.value,
                     "N": int(prm.get("N", np.asarray(prm.get("xi", [])).size)),
                     "p": prm.get("p"), "alpha": prm.get("alpha"), "beta": prm.get("beta"),
                     "quadrature": r.quadrature, "oracle": r.oracle,
                     "abs_gap": r.abs_gap, "rel_gap": r.rel_gap,
                     "threshold": suite.threshold(r), "pass": bool(r.rel_gap <= suite.threshold(r))})
    for n, mass in suite.masses:
        gap = abs(mass - 4.0)
        rows.append({"formula": "HeatBallMass", "N": n, "p": None, "alpha": None, "beta": None,
                     "quadrature": mass, "oracle": 4.0, "abs_gap": gap, "rel_gap": gap / 4.0,
                     "threshold": settings.mass_tol, "pass": bool(gap <= settings.mass_tol)})
    result = {"rows": len(rows), "failures": sum(not r["pass"] for r in rows),
              "worst_rel_gap": suite.worst(), "table": rows}
    return (EXIT_PASS if suite.passed else EXIT_FAIL), result, rows


def _solve_problem(args):
    h, eps, p = args.h, args.eps, args.p
    domain = None
    if args.problem == "square":
        box, exact = ((0.0, 1.0), (0.0, 1.0)), (lambda y: y[:, 0] ** 2 - y[:, 1] ** 2)
    elif args.problem == "annulus":
        k = 1.0 if p.is_infinite else ((p.p - 2.0) / (p.p - 1.0) if p.p != 2.0 else None)
        if k is None:
            exact = lambda y: np.log(np.linalg.norm(y, axis=1))
        else:
            exact = lambda y, k=k: np.linalg.norm(y, axis=1) ** k
        box = ((-1.5, 1.5), (-1.5, 1.5))
        domain = lambda y: (np.linalg.norm(y, axis=1) >= 0.5) & (np.linalg.norm(y, axis=1) <= 1.5)
    elif args.problem == "aronsson":
        box = ((0.25, 1.25), (0.25, 1.25))
        exact = lambda y: np.abs(y[:, 0]) ** (4 / 3) - np.abs(y[:, 1]) ** (4 / 3)
    elif args.problem == "constant":
        box, exact = ((0.0, 1.0), (0.0, 1.0)), (lambda y: np.full(y.shape[0], 1.5))
    else:
        box, exact = ((0.0, 1.0), (0.0, 1.0)), (lambda y: 0.3 * y[:, 0] - 0.7 * y[:, 1])
    bound = args.error_bound
    problem = GridProblem(box, h, eps, p, exact, max_iterations=args.max_iterations,
                          tolerance=args.tolerance, domain=domain, rule_order=args.order,
                          accelerate=args.accelerate)
    return problem, exact, bound


def cmd_solve(args):
    try:
        problem, exact, bound = _solve_problem(args)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    sol = solve(problem)
    rep = residual_report(sol, exact)
    result = sol.metadata()
    result.update(rep.to_dict())
    result["error_bound"] = bound
    if args.format == "csv":
        rows = list(csv.DictReader(io.StringIO(sol.to_csv())))
    else:
        rows = None
    if not sol.converged:
        return EXIT_NONCONVERGED, result, rows
    return (EXIT_PASS if rep.error_sup <= bound else EXIT_FAIL), result, rows


def cmd_compare_means(args):
    contrast = continuity_contrast(args.n, args.N)
    mpr = monotonicity_search("mpr", args.p, args.pairs, args.seed, args.samples)
    var = monotonicity_search("pmean", args.p, args.pairs, args.seed, args.samples)
    extra = [monotonicity_search("mpr", q, args.pairs, args.seed, args.samples) for q in args.extra_p]
    checks = {
        "contrast_average": abs(contrast.p_mean - contrast.exact) <= 1e-4,
        "contrast_min_max": abs(contrast.min_max_mean - 0.5) <= 1e-12,
        "mpr_violation_found": mpr.violations >= 1,
        "pmean_no_violation": var.violations == 0,
    }
    x = np.full(args.N, 0.3)
    fields = []
    for name in [f for f in args.fields.split(",") if f.strip()]:
        u = make_field(name.strip(), args.N, p=args.p)
        fields.append({"field": name.strip(), **compare_on_field(u, x, args.eps, args.p)})
    result = {"contrast": contrast.to_dict(), "search": mpr.to_dict(), "pmean_search": var.to_dict(),
              "extra_searches": [e.to_dict() for e in extra], "fields": fields, "checks": checks}
    rows = [{"experiment": "contrast", "mean": "average", "p": 2.0, "value": contrast.p_mean,
             "reference": contrast.exact, "violations": None},
            {"experiment": "contrast", "mean": "min-max", "p": math.inf, "value": contrast.min_max_mean,
             "reference": 0.5, "violations": None}]
    for s in [mpr, var] + extra:
        rows.append({"experiment": "monotonicity", "mean": s.mean, "p": s.p, "value": s.max_gap,
                     "reference": None, "violations": s.violations})
    return (EXIT_PASS if all(checks.values()) else EXIT_FAIL), result, rows


_COMMANDS = {"pmean": cmd_pmean, "verify": cmd_verify, "oracle-check": cmd_oracle_check,
             "solve": cmd_solve, "compare-means": cmd_compare_means}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_config(argv)
    except ConfigError as exc:
        print(f"pmeanlab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    config = resolved_config(args)
    try:
        code, result, rows = _COMMANDS[args.command](args)
    except (ConfigError, OracleRangeError, UnsupportedDimensionError, TruncationError) as exc:
        print(f"pmeanlab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ZeroGradientError, StencilDomainError, FloatingPointError,
            np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"pmeanlab: numerical failure: {exc}", file=sys.stderr)
        code, result, rows = EXIT_NUMERIC, {"error": str(exc)}, None
    except ValueError as exc:
        print(f"pmeanlab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(args, config, code, result, rows)
    return code
