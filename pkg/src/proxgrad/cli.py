"""Command line interface.

Subcommands:
  run        -- execute an experiment from a preset or a JSON config and
                write the CSV trace plus a summary
  gen-lasso  -- generate a certified sparse regression instance (.npz)
  check      -- run a built-in diagnostics suite (invariants | rates)
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import checks
from .data import generate_pnorm_lasso
from .harness import config_from_json, preset, preset_names, run_experiment


def _cmd_run(args):
    if bool(args.preset) == bool(args.config):
        raise ValueError("exactly one of --preset / --config is required")
    cfg = preset(args.preset) if args.preset else config_from_json(args.config)
    if args.solvers:
        cfg.solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
        if not cfg.solvers:
            raise ValueError("empty solver list")
    if args.budget is not None:
        cfg.budget = args.budget
    if args.out is not None:
        cfg.out = args.out
    elif cfg.out is None:
        stem = args.preset if args.preset else "experiment"
        cfg.out = f"{stem}.csv"
    result = run_experiment(cfg)
    print(f"wrote {result.csv_path}")
    print(result.summary, end="")
    return 0


def _cmd_gen_lasso(args):
    inst = generate_pnorm_lasso(args.m, args.n, args.k, args.p, args.lam, args.seed)
    np.savez(
        args.out,
        A=inst.A,
        b=inst.b,
        p=inst.p,
        lam=inst.lam,
        x_star=inst.x_star,
        phi_star=inst.phi_star,
        seed=inst.seed,
    )
    print(f"wrote {args.out} (m={args.m} n={args.n} k={args.k} p={args.p} lambda={args.lam})")
    return 0


def _cmd_check(args):
    rows = checks.SUITES[args.suite]()
    failures = 0
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failures += 0 if ok else 1
    print(f"{len(rows) - failures}/{len(rows)} checks passed")
    return 1 if failures else 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="proxgrad",
        description="Composite convex optimization benchmarks in operator-call units.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment and write CSV traces")
    run_p.add_argument("--preset", help=f"one of: {', '.join(preset_names())}")
    run_p.add_argument("--config", help="JSON config file")
    run_p.add_argument("--solvers", help="comma-separated solver specs overriding the config")
    run_p.add_argument("--budget", type=int, help="operator-call budget override")
    run_p.add_argument("--out", help="output CSV path")
    run_p.set_defaults(func=_cmd_run)

    gen_p = sub.add_parser("gen-lasso", help="generate a certified sparse regression instance")
    gen_p.add_argument("--m", type=int, required=True)
    gen_p.add_argument("--n", type=int, required=True)
    gen_p.add_argument("--k", type=int, required=True)
    gen_p.add_argument("--p", type=float, required=True)
    gen_p.add_argument("--lambda", dest="lam", type=float, required=True)
    gen_p.add_argument("--seed", type=int, required=True)
    gen_p.add_argument("--out", required=True, help="output .npz path")
    gen_p.set_defaults(func=_cmd_gen_lasso)

    check_p = sub.add_parser("check", help="run a built-in diagnostics suite")
    check_p.add_argument("--suite", choices=sorted(checks.SUITES), required=True)
    check_p.set_defaults(func=_cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface a clean message, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
