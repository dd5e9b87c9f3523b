"""Command line interface.

    ncstokes verify --n 2 --k 0 --bc hom
    ncstokes conv --levels 2 4 8 --k 0 --method mixed --solver direct --out conv.csv

Exit codes: 0 success, 1 solver failure or failed check, 2 invalid arguments.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .complex import complex_spaces, third_row_residual, verify_commuting, verify_exactness
from .fields import random_poly_field
from .mesh import build_uniform_cube_mesh
from .quadcurl import METHODS, convergence_study
from .solvers import SolverConfig, SolverError

COMMUTING_TOL = 1e-10


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ncstokes", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="check exactness and commuting diagrams on one mesh")
    v.add_argument("--n", type=_positive_int, default=1, help="subdivisions per axis")
    v.add_argument("--k", type=int, choices=(0, 1), default=0)
    v.add_argument("--bc", choices=("hom", "none"), default="none")
    v.add_argument("--samples", type=_positive_int, default=3, help="random polynomial fields to test")
    v.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("conv", help="run a convergence study for the quad-curl problem")
    c.add_argument("--levels", type=_positive_int, nargs="+", default=[2, 4, 8],
                   help="subdivisions per axis, ascending (h = 1/n)")
    c.add_argument("--k", type=int, choices=(0, 1), default=0)
    c.add_argument("--method", choices=METHODS, default="mixed")
    c.add_argument("--solver", choices=("direct", "minres"), default="direct")
    c.add_argument("--tol", type=_positive_float, default=1e-10, help="relative solver tolerance")
    c.add_argument("--maxiter", type=_positive_int, default=20000)
    c.add_argument("--load-degree", type=_positive_int, default=None,
                   help="load quadrature degree (default: chosen per level)")
    c.add_argument("--out", default=None, help="CSV output path")
    return p


def cmd_verify(args) -> int:
    mesh = build_uniform_cube_mesh(args.n)
    report = verify_exactness(mesh, args.k, args.bc, n=args.n)
    print(report.to_text())
    rng = np.random.default_rng(args.seed)
    worst: dict[str, float] = {}
    for _ in range(args.samples):
        res = verify_commuting(mesh, args.k, random_poly_field(rng, 2), random_poly_field(rng, 2, 1))
        for key, val in res.items():
            worst[key] = max(worst.get(key, 0.0), val)
    _, W, _, _ = complex_spaces(mesh, args.k, args.bc)
    worst["third_row"] = third_row_residual(mesh, args.k, rng.standard_normal((W.n_coeffs, args.samples)),
                                            bc=args.bc)
    ok = report.passed
    for key, val in worst.items():
        good = val < COMMUTING_TOL
        ok &= good
        print(f"commuting.{key}={val:.3e} ({'pass' if good else 'FAIL'})")
    print(f"overall={'pass' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_conv(args) -> int:
    if any(b <= a for a, b in zip(args.levels, args.levels[1:])):
        print("error: --levels must be strictly ascending", file=sys.stderr)
        return 2
    # the schur method always runs CG on the Schur complement for its Maxwell
    # solves; --solver then only selects the Stokes solver
    cfg = SolverConfig(args.solver, args.tol, args.maxiter)
    try:
        rows = convergence_study(args.levels, args.k, args.method, cfg, out=args.out,
                                 load_degree=args.load_degree)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    print(f"{'h':>8} {'dofs':>8} {'err_l2':>11} {'rate':>5} {'err_curl':>11} {'rate':>5} "
          f"{'err_curlh1':>11} {'rate':>5} {'lambda/u':>9} {'sec':>7}")
    for r in rows:
        rt = r.rates or (float("nan"),) * 3
        e = r.errors.as_tuple()
        print(f"{r.h:8.5f} {r.dofs:8d} {e[0]:11.4e} {rt[0]:5.2f} {e[1]:11.4e} {rt[1]:5.2f} "
              f"{e[2]:11.4e} {rt[2]:5.2f} {r.lam_rel:9.1e} {r.solve_seconds:7.2f}")
    if args.out:
        print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        return cmd_verify(args)
    return cmd_conv(args)


if __name__ == "__main__":
    sys.exit(main())
