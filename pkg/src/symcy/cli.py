"""Command line entry point.

Exit status: 0 on success, 1 on a numerical failure (a failed check, a
solver error), 2 on a configuration error (bad flags, unknown space,
unreadable or malformed files).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .continuity import (MAProblem, continuation_solve, ellipticity_certificate, manufactured_problem,
                         membership_U_eps, normalize_to_target)
from .errors import ContinuationError, DomainError, QuadratureError, WallSingularityError
from .invariants import InvariantBasis, jacobian_rho, rho1, rho2
from .ma_residual import ChamberFunction, residual_3_10
from .polyexpr import parse_matrix, parse_polynomial
from .radial_profile import RadialProfile
from .root_data import builtin_descriptor, chamber_width, descriptor_from_json
from .verify import format_report, run_checks

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    space: str | None = None
    output: Path | None = None
    fmt: str = "csv"
    tolerances: dict = field(default_factory=dict)


def _num(x) -> str:
    return repr(float(x)) if not math.isfinite(x) else f"{float(x):.16e}"


def _write_rows(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_num(v) for v in row])
    return buf.getvalue()


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _parse_grid(text: str):
    try:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError:
        raise ConfigError(f"grid must look like start:stop:count, got {text!r}") from None


def _load_descriptor(args):
    if args.descriptor:
        try:
            data = json.loads(Path(args.descriptor).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read descriptor {args.descriptor}: {exc}") from None
        return descriptor_from_json(data)
    if not args.space:
        raise ConfigError("give --space NAME or --descriptor FILE")
    return builtin_descriptor(args.space, m=args.m, n=getattr(args, "n", None))


def cmd_rank1(args) -> int:
    s_values = _parse_grid(args.grid)
    if np.any(s_values <= 0):
        raise ConfigError("rank1 grid must be positive")
    prof = RadialProfile(args.n, args.d, args.c, args.C1, args.C2, args.reading)
    other = RadialProfile(args.n, args.d, args.c, args.C1, args.C2,
                          "outer" if args.reading == "inner" else "inner")
    rows = []
    for s in s_values:
        u = float(s) ** 2
        rows.append((s, prof.f_value(u), prof.f_prime(u), prof.f_second(u), prof.ode_residual(float(s))))
    text = _write_rows(["s", "f", "f_prime", "f_second", "ode_residual"], rows)
    if args.lengths is not None:
        T, L, slope = prof.completeness_diagnostic(args.lengths)
        text += "\n" + _write_rows(["T", "L"], zip(T, L))
        text += f"# log-log slope of L over the last decade: {slope:.6e}\n"
    _emit(text, args.out)
    worst = max(abs(r[4]) for r in rows)
    worst_other = max(abs(other.ode_residual(float(s))) for s in s_values)
    print(f"max |ode_residual| ({args.reading}): {worst:.6e}", file=sys.stderr)
    print(f"max |ode_residual| ({other.reading}): {worst_other:.6e}", file=sys.stderr)
    return EXIT_OK


def cmd_rank2_tables(args) -> int:
    desc = _load_descriptor(args)
    if desc.r != 2:
        raise ConfigError("rank2-tables needs a rank two space")
    t = desc.type_tag
    width = chamber_width(t)
    rows = []
    for r in np.linspace(args.r_max / args.nr, args.r_max, args.nr):
        for j in range(args.ntheta):
            th = width * (j + 0.5) / args.ntheta
            x = np.array([r * math.cos(th), r * math.sin(th)])
            rows.append((x[0], x[1], rho1(x), rho2(t, x), np.linalg.det(jacobian_rho(t, x))))
    _emit(_write_rows(["x1", "x2", "rho1", "rho2", "det_J"], rows), args.out)
    return EXIT_OK


def _load_f(text: str) -> str:
    path = Path(text)
    if path.suffix == ".json" or path.exists():
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read f config {text}: {exc}") from None
        if "f" not in data:
            raise ConfigError("f config needs a key 'f' with a polynomial in y1, y2")
        return data["f"]
    return text


def cmd_residual(args) -> int:
    desc = _load_descriptor(args)
    rrs = desc.root_system()
    poly = parse_polynomial(_load_f(args.f))
    rows = []
    if desc.r == 1:
        if any(j for (_, j), _ in poly.terms):
            raise ConfigError("a rank one f may only depend on y1")
        f = ChamberFunction(lambda y: poly((y[0], 0.0)),
                            lambda y: np.array([poly.gradient((y[0], 0.0))[0]]),
                            lambda y: np.array([[poly.hessian((y[0], 0.0))[0, 0]]]))
        basis = InvariantBasis("rank1")
        for s in _parse_grid(args.grid):
            rep = residual_3_10(f, rrs, basis, np.array([s]))
            rows.append((s, s * s, rep.residual, rep.det_factor, rep.D_factor))
        header = ["x1", "y1", "residual", "det_factor", "D_factor"]
    else:
        f = ChamberFunction(poly, poly.gradient, poly.hessian)
        basis = InvariantBasis(desc.type_tag)
        width = chamber_width(desc.type_tag)
        radii = _parse_grid(args.grid)
        for r in radii:
            for j in range(args.ntheta):
                th = width * (j + 0.5) / args.ntheta
                x = np.array([r * math.cos(th), r * math.sin(th)])
                y = basis.values(x)
                rep = residual_3_10(f, rrs, basis, x)
                rows.append((x[0], x[1], y[0], y[1], rep.residual, rep.det_factor, rep.D_factor))
        header = ["x1", "x2", "y1", "y2", "residual", "det_factor", "D_factor"]
    _emit(_write_rows(header, rows), args.out)
    return EXIT_OK


def _problem_from_json(data, grid, eps_override):
    try:
        domain = tuple(tuple(float(v) for v in pair) for pair in data["domain"])
        A = data.get("A", [[1, 0], [0, 1]])
        A = parse_matrix(A)
        B = [parse_matrix(b) for b in data.get("B", [[[0, 0], [0, 0]], [[0, 0], [0, 0]]])]
        sigma = [parse_polynomial(s) for s in data.get("sigma", [1, 0])]
        eps = float(eps_override if eps_override is not None else data.get("eps", 0.1))
        target = float(data.get("target", 4.0))
        f0 = parse_polynomial(data.get("f0", "(y1^2 + y2^2)/2"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed problem file: {exc}") from None
    return MAProblem(domain, grid, A, B, sigma, eps, target), f0


def _parse_shape(text: str):
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise ConfigError(f"grid must look like N1xN2, got {text!r}") from None


def _schedule(text: str):
    if text == "adaptive":
        return "adaptive"
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise ConfigError("schedule is 'adaptive' or a comma separated list of t values") from None


def _manufactured_study():
    """Built-in convergence study on 9x9, 17x17 and 33x33 grids."""
    A = np.array([[1.0, 0.2], [0.1, 1.0]])
    B = [np.array([[0.1, 0.02], [0.02, 0.05]]), np.array([[0.03, 0.0], [0.0, 0.04]])]
    sigma = [1.0, 0.5]
    f_star = ChamberFunction(
        lambda y: 0.5 * math.exp(0.5 * (y @ y)) + y[0],
        lambda y: 0.5 * math.exp(0.5 * (y @ y)) * y + np.array([1.0, 0.0]),
        lambda y: 0.5 * math.exp(0.5 * (y @ y)) * (np.eye(2) + np.outer(y, y)))
    report = []
    errors = []
    for n in (9, 17, 33):
        problem, f0 = manufactured_problem(f_star, A, B, sigma, 0.1, delta=0.02,
                                           domain=((0.2, 1.0), (0.2, 1.0)), shape=(n, n))
        state = continuation_solve(problem, f0)
        exact = np.array([f_star(y) for y in problem.nodes])
        err = float(np.max(np.abs(state.f.ravel() - exact)))
        errors.append(err)
        report.append({"grid": f"{n}x{n}", "max_error": err, "steps": state.history,
                       "final_residual_history": state.residual_history})
    orders = [math.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1)]
    return {"study": report, "observed_orders": orders}, state


def cmd_solve(args) -> int:
    if args.manufactured:
        report, state = _manufactured_study()
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
        _emit(text, args.out_json)
        if args.out_csv:
            _write_field(state, args.out_csv)
        return EXIT_OK
    if not args.problem:
        raise ConfigError("solve needs --problem FILE or --manufactured")
    try:
        data = json.loads(Path(args.problem).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read problem {args.problem}: {exc}") from None
    problem, f0_poly = _problem_from_json(data, _parse_shape(args.grid), args.eps)
    f0 = normalize_to_target(problem, problem.sample(f0_poly))
    member = membership_U_eps(problem, f0)
    cert = ellipticity_certificate(problem, f0)
    out = {"start": {"integral": member.integral, "target_integral": member.target_integral,
                     "certificate_min": cert.E_min, "certificate_ok": cert.ok}}
    try:
        state = continuation_solve(problem, f0, _schedule(args.schedule))
    except ContinuationError as exc:
        out["error"] = {"type": type(exc).__name__, "message": str(exc),
                        "cells": [list(c) for c in getattr(exc, "cells", [])][:50]}
        if exc.state is not None:
            out["last_accepted_t"] = exc.state.t
        _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out_json)
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out["steps"] = state.history
    out["final"] = state.summary()
    _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out_json)
    if args.out_csv:
        _write_field(state, args.out_csv)
    return EXIT_OK


def _write_field(state, path: Path) -> None:
    f = state.f
    rows = []
    for i in range(f.shape[0]):
        for j in range(f.shape[1]):
            rows.append((f.origin[0] + i * f.spacing[0], f.origin[1] + j * f.spacing[1], f.values[i, j]))
    path.write_text(_write_rows(["y1", "y2", "f"], rows))


def cmd_verify(args) -> int:
    desc = _load_descriptor(args)
    results = run_checks(desc)
    text = format_report(desc, results)
    _emit(text, args.out)
    if args.out is not None:
        sys.stdout.write(text)
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symcy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank1", help="rank one profile f, its derivatives and the ODE residual")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=0, choices=(0, 1, 3, 7))
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--C1", type=float, default=1.0)
    p.add_argument("--C2", type=float, default=1.0)
    p.add_argument("--reading", choices=("inner", "outer"), default="inner")
    p.add_argument("--grid", default="0.01:10:200", help="start:stop:count in s")
    p.add_argument("--lengths", type=float, default=None, metavar="T_MAX")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_rank1)

    def space_args(p):
        p.add_argument("--space", default=None, help="built-in space name")
        p.add_argument("--descriptor", default=None, help="JSON descriptor file")
        p.add_argument("--m", type=int, default=None, help="parameter of a family of spaces")
        p.add_argument("--n", type=int, default=None, help="dimension of a rank one space")

    p = sub.add_parser("rank2-tables", help="generators and det J over a chamber grid")
    space_args(p)
    p.add_argument("--r-max", type=float, default=2.0)
    p.add_argument("--nr", type=int, default=10)
    p.add_argument("--ntheta", type=int, default=10)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_rank2_tables)

    p = sub.add_parser("residual", help="residual of the invariant-coordinate equation on a grid")
    space_args(p)
    p.add_argument("--f", required=True, help="polynomial in y1, y2 or a JSON file {\"f\": ...}")
    p.add_argument("--grid", default="0.2:2:10", help="radii start:stop:count")
    p.add_argument("--ntheta", type=int, default=8)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_residual)

    p = sub.add_parser("solve", help="continuation solver for the Monge-Ampere-type equation")
    p.add_argument("--problem", default=None)
    p.add_argument("--grid", default="17x17")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--schedule", default="adaptive")
    p.add_argument("--manufactured", action="store_true")
    p.add_argument("--out-json", type=Path, default=None)
    p.add_argument("--out-csv", type=Path, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run the invariant checks for a space")
    space_args(p)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = RunConfig(args.command, getattr(args, "space", None), getattr(args, "out", None))
    try:
        return args.func(args)
    except (ConfigError, DomainError, OSError) as exc:
        print(f"{config.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ContinuationError, QuadratureError, WallSingularityError, ArithmeticError) as exc:
        print(f"{config.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
