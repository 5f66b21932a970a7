"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 domain error,
3 empty result, 4 resource cap.
"""
from __future__ import annotations

import argparse
import contextlib
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import lattice as lt
from .asymptotics import (INF, NSProfile, ScalingPath, UnsupportedCaseError, alpha_formula,
                          default_t_grid, heat_trace_curve, product_alpha, two_param_alpha)
from .heat_kernel import DomainError
from .quadrature import QuadratureError, QuadratureSpec

EXIT_OK, EXIT_VERIFY, EXIT_DOMAIN, EXIT_EMPTY, EXIT_CAP = 0, 1, 2, 3, 4


def fmt(x) -> str:
    if x is INF:
        return "inf"
    return f"{x:.17g}"


def parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def parse_ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def read_config(path) -> dict:
    config = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep:
            raise DomainError(f"{path}:{lineno}: expected 'key = value'")
        config[key.replace("-", "_")] = value
    return config


def _quad(args) -> QuadratureSpec:
    return QuadratureSpec(rel_tol=args.rel_tol, abs_tol=args.abs_tol)


def _t_grid(args):
    if args.points < 1:
        raise DomainError("--points must be >= 1")
    if not 0 < args.t_min <= args.t_max:
        raise DomainError("need 0 < t-min <= t-max")
    return default_t_grid(args.t_min, args.t_max, args.points)


def cmd_heat_trace(args, out, err):
    samples = heat_trace_curve(args.degree, args.zeta, _t_grid(args), _quad(args), variant=args.variant)
    out.write("t,c,theta,abs_err\n")
    for s in samples:
        out.write(f"{fmt(s.point.t)},{fmt(s.point.c)},{fmt(s.theta)},{fmt(s.est_abs_error)}\n")
    return EXIT_OK


def _zeta_grid(args):
    if args.zeta is not None:
        return parse_floats(args.zeta)
    if args.zeta_min is None or args.zeta_max is None:
        return []
    count = int(math.floor((args.zeta_max - args.zeta_min) / args.zeta_step + 1e-9)) + 1
    return [round(args.zeta_min + i * args.zeta_step, 12) for i in range(max(count, 0))]


def cmd_alpha(args, out, err):
    rows = []
    for zeta in _zeta_grid(args):
        try:
            formula = alpha_formula(args.degree, zeta)
            hat = two_param_alpha(args.degree, ScalingPath.from_zeta(zeta), _t_grid(args), _quad(args),
                                  estimator=args.estimator, variant=args.variant)
        except DomainError as exc:
            err.write(f"skipping zeta={zeta:g}: {exc}\n")
            continue
        rows.append((zeta, hat, formula))
    if not rows:
        err.write("no valid zeta values\n")
        return EXIT_EMPTY
    out.write("zeta,alpha_hat,alpha_formula,abs_dev\n")
    for zeta, hat, formula in rows:
        out.write(f"{fmt(zeta)},{fmt(hat)},{fmt(formula)},{fmt(abs(hat - formula))}\n")
    return EXIT_OK


def _log_grid(lo, hi, points):
    if points < 1 or not 0 < lo <= hi:
        raise DomainError("grid needs 0 < min <= max and points >= 1")
    return np.logspace(math.log10(lo), math.log10(hi), points)


def cmd_lattice(args, out, err):
    mu = _log_grid(args.mu_min, args.mu_max, args.mu_points)
    nu = _log_grid(args.nu_min, args.nu_max, args.nu_points)
    if args.n < 2:
        raise DomainError("n must be >= 2")
    if args.perturb_k is not None:
        if args.n > lt.DENSE_CAP:
            raise lt.ResourceCapError(
                f"perturbed operators need the dense path, capped at n = {lt.DENSE_CAP}; lower --n")
        grid = lt.perturbed_grid(args.n, args.perturb_k, args.seed, mu, nu, args.lambda0)
    else:
        grid = lt.two_param_grid(args.n, mu, nu, args.lambda0, method=args.method)
    lt.write_grid_csv(grid, out)
    if args.path_zeta is not None:
        report = lt.lattice_alpha_along_path(parse_ints(args.path_n), args.path_zeta)
        target = 4 + 2 * args.path_zeta
        dest = open(args.report, "w") if args.report else contextlib.nullcontext(err)
        with dest as fh:
            fh.write("n,zeta,slope,alpha_formula,abs_dev\n")
            for p in report.per_n:
                fh.write(f"{p.n},{fmt(args.path_zeta)},{fmt(p.slope)},{fmt(target)},{fmt(abs(p.slope - target))}\n")
            if report.extrapolated is not None:
                fh.write(f"inf,{fmt(args.path_zeta)},{fmt(report.extrapolated)},{fmt(target)},"
                         f"{fmt(abs(report.extrapolated - target))}\n")
    return EXIT_OK


def cmd_product(args, out, err):
    F = NSProfile.loads(Path(args.fibre).read_text())
    B = NSProfile.loads(Path(args.base).read_text())
    path = ScalingPath(args.r, args.s)
    degrees = parse_ints(args.k) if args.k else list(range(F.top_degree + B.top_degree))
    if not degrees:
        return EXIT_EMPTY
    out.write("k,alpha\n")
    for k in degrees:
        out.write(f"{k},{fmt(product_alpha(k, F, B, path))}\n")
    return EXIT_OK


def cmd_verify(args, out, err):
    from .verify import run_suite

    checks = run_suite(args.suite)
    out.write("suite,check,status,detail\n")
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        out.write(f"{c.suite},\"{c.name}\",{status},\"{c.detail}\"\n")
        err.write(f"{status}  {c.suite}: {c.name}\n")
    failed = sum(not c.passed for c in checks)
    err.write(f"{len(checks) - failed}/{len(checks)} checks passed\n")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tpnsi", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; command-line flags win")
    common.add_argument("--out", help="output path (default stdout)")
    sub = parser.add_subparsers(dest="command", required=True)

    def heat_args(p):
        p.add_argument("--degree", type=int, default=0)
        p.add_argument("--t-min", type=float, default=1e3)
        p.add_argument("--t-max", type=float, default=1e7)
        p.add_argument("--points", type=int, default=41)
        p.add_argument("--rel-tol", type=float, default=QuadratureSpec.rel_tol)
        p.add_argument("--abs-tol", type=float, default=QuadratureSpec.abs_tol)
        p.add_argument("--variant", choices=("exact", "substituted"), default="exact")

    p = sub.add_parser("heat-trace", parents=[common], help="heat trace along c = t^zeta")
    heat_args(p)
    p.add_argument("--zeta", type=float, default=0.0)
    p.set_defaults(func=cmd_heat_trace)

    p = sub.add_parser("alpha", parents=[common], help="fitted exponents against the closed form")
    heat_args(p)
    p.add_argument("--zeta", help="comma-separated zeta values")
    p.add_argument("--zeta-min", type=float)
    p.add_argument("--zeta-max", type=float)
    p.add_argument("--zeta-step", type=float, default=0.1)
    p.add_argument("--estimator", choices=("ls", "liminf"), default="ls")
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("lattice", parents=[common], help="counting grid on a Heisenberg quotient")
    p.add_argument("--n", type=int, default=4)
    for name in ("mu", "nu"):
        p.add_argument(f"--{name}-min", type=float, default=0.5)
        p.add_argument(f"--{name}-max", type=float, default=2.0)
        p.add_argument(f"--{name}-points", type=int, default=5)
    p.add_argument("--lambda0", type=float, default=1.0)
    p.add_argument("--method", choices=("auto", "dense", "harper", "inertia"), default="auto")
    p.add_argument("--perturb-k", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--path-zeta", type=float)
    p.add_argument("--path-n", default="12,16,20,24")
    p.add_argument("--report", help="slope report path (default stderr)")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("product", parents=[common], help="product formula for NS profiles")
    p.add_argument("--fibre", required=True)
    p.add_argument("--base", required=True)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--k", help="comma-separated degrees (default all)")
    p.set_defaults(func=cmd_product)

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("--suite", choices=("identities", "bounds", "invariance", "product", "all"), default="all")
    p.set_defaults(func=cmd_verify)
    return parser


def _parse(parser, argv):
    args = parser.parse_args(argv)
    if args.config:
        config = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        for key, value in config.items():
            if key not in known or key in ("config", "help"):
                raise DomainError(f"unknown config key {key!r} for {args.command}")
            action = known[key]
            sub.set_defaults(**{key: action.type(value) if action.type else value})
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    err = sys.stderr
    try:
        args = _parse(parser, argv)
        buf = io.StringIO()
        code = args.func(args, buf, err)
        if args.out:
            Path(args.out).write_text(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
        return code
    except lt.WindowError as exc:
        err.write(f"empty window: {exc}\n")
        return EXIT_EMPTY
    except (DomainError, UnsupportedCaseError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_DOMAIN
    except (lt.ResourceCapError, MemoryError) as exc:
        err.write(f"resource cap: {exc}\n")
        return EXIT_CAP
    except QuadratureError as exc:
        # the subdivision budget is a resource cap
        err.write(f"quadrature failure in {exc.component or 'integral'}: {exc}\n")
        return EXIT_CAP
    except FileNotFoundError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
