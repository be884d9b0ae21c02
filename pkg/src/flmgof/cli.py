"""Command-line surface: test, simulate, diagnose.

Exit codes: 0 on success, 2 for parse/configuration errors, 3 for numeric
failures. Worker count for the simulate subcommand comes from --workers or
the FLMGOF_WORKERS environment variable; results are seed-deterministic
regardless of the worker count.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io
from .errors import ConfigError, NumericError, ParseError
from .flm import BetaFunction, EstimatorConfig, fit_flm, residuals_simple
from .pipeline import RunConfig, _parse_p_policy, _simple_basis, compute_diagnostic, run_test
from .simulation import PowerStudyConfig, paper_scale, run_power_study


def _add_test_args(parser):
    parser.add_argument("--curves", required=True, help="curves CSV (header = grid)")
    parser.add_argument("--response", required=True, help="response CSV (one column)")
    parser.add_argument("--hypothesis", choices=["simple", "composite"], default="composite")
    parser.add_argument("--estimator", choices=["bspline", "fpc", "fpls"], default="bspline")
    parser.add_argument("--p", default="auto",
                        help="auto, auto-gcv, auto-pcv, auto-bic, or a fixed integer")
    parser.add_argument("--B", type=int, default=1000, help="bootstrap replicates")
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flmgof",
        description="Goodness-of-fit testing for the functional linear model with scalar response.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run a goodness-of-fit test on CSV data")
    _add_test_args(p_test)
    p_test.add_argument("--method", choices=["pcvm", "ftest", "kernel"], default="pcvm")
    p_test.add_argument("--beta0", help="coefficient-function CSV for the simple hypothesis "
                                        "(one value per grid point); defaults to zero")
    p_test.add_argument("--bandwidth", default="pcv", help="kernel method: positive float or pcv")
    p_test.add_argument("--center", action="store_true",
                        help="mean-center both variables before testing")
    p_test.add_argument("--timings", action="store_true", help="record wall-clock timings "
                                                               "(breaks byte-identical reports)")
    p_test.add_argument("--out", help="output path (default: stdout)")
    p_test.add_argument("--format", choices=["json", "csv"], default="json")

    p_sim = sub.add_parser("simulate", help="Monte Carlo size/power study")
    p_sim.add_argument("--hypothesis", choices=["simple", "composite"], default="composite")
    p_sim.add_argument("--scenario", action="append", required=True,
                       help="scenario label like H0 or H1,3 (repeatable)")
    p_sim.add_argument("--estimator", action="append", choices=["bspline", "fpc", "fpls"],
                       help="estimator for the pcvm method (repeatable; default bspline)")
    p_sim.add_argument("--method", action="append", choices=["pcvm", "ftest", "kernel"],
                       help="test to run (repeatable; default pcvm)")
    p_sim.add_argument("--n", action="append", type=int, help="sample size (repeatable)")
    p_sim.add_argument("--M", type=int, default=100, help="Monte Carlo replicates")
    p_sim.add_argument("--B", type=int, default=200, help="bootstrap replicates")
    p_sim.add_argument("--alpha", default="0.10,0.05,0.01", help="comma-separated levels")
    p_sim.add_argument("--p", default="auto", help="p policy for the pcvm method")
    p_sim.add_argument("--noise", choices=["gaussian", "exponential"], default="gaussian")
    p_sim.add_argument("--bandwidth", default="pcv")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--ou-stationary", action="store_true",
                       help="draw covariates from the stationary process variant "
                            "(the configuration that reproduces the reported tables)")
    p_sim.add_argument("--levels", choices=["published", "reported"], default="published",
                       help="deviation amplitude calibration for the scenarios")
    p_sim.add_argument("--workers", type=int, default=None)
    p_sim.add_argument("--paper-scale", action="store_true",
                       help="full-scale mode: M = B = 1000 (hours of compute)")
    p_sim.add_argument("--out", help="output path (default: stdout)")
    p_sim.add_argument("--format", choices=["json", "csv"], default="csv")

    p_diag = sub.add_parser("diagnose", help="projection-averaged residual process")
    _add_test_args(p_diag)
    p_diag.add_argument("--beta0", help="coefficient-function CSV for the simple hypothesis")
    p_diag.add_argument("--G", type=int, default=200, help="number of random projections")
    p_diag.add_argument("--out", required=True, help="output CSV path")
    return parser


def _load_beta0(path, grid):
    values = np.loadtxt(path, delimiter=",", ndmin=1)
    return BetaFunction(grid=grid, values=values)


def _cmd_test(args) -> int:
    xs, ys = io.load_dataset(args.curves, args.response)
    beta0 = _load_beta0(args.beta0, xs.grid) if args.beta0 else None
    config = RunConfig(
        hypothesis=args.hypothesis,
        method=args.method,
        estimator=args.estimator,
        p_policy=args.p,
        B=args.B,
        seed=args.seed,
        bandwidth=_parse_bandwidth(args.bandwidth),
        center=args.center,
        include_timings=args.timings,
    )
    report = run_test(xs, ys, config, beta0=beta0)
    if args.out:
        io.write_report(report, args.out, fmt=args.format)
    else:
        sys.stdout.write(io.report_to_json(report))
    return 0


def _parse_bandwidth(text):
    if isinstance(text, str) and text.strip() == "pcv":
        return "pcv"
    return float(text)


def _cmd_simulate(args) -> int:
    config = PowerStudyConfig(
        hypothesis=args.hypothesis,
        scenarios=tuple(args.scenario),
        methods=tuple(args.method or ["pcvm"]),
        estimators=tuple(args.estimator or ["bspline"]),
        ns=tuple(args.n or [100]),
        M=args.M,
        B=args.B,
        alphas=tuple(float(a) for a in args.alpha.split(",")),
        seed=args.seed,
        noise=args.noise,
        bandwidth=_parse_bandwidth(args.bandwidth),
        p_policy=args.p,
        ou_stationary=args.ou_stationary,
        levels=args.levels,
        workers=args.workers,
    )
    if args.paper_scale:
        config = paper_scale(config)
    table = run_power_study(config)
    if args.out:
        io.write_power_table(table, args.out, fmt=args.format)
    else:
        sys.stdout.write(io.power_table_to_json(table))
    return 0


def _cmd_diagnose(args) -> int:
    xs, ys = io.load_dataset(args.curves, args.response)
    beta0 = _load_beta0(args.beta0, xs.grid) if args.beta0 else None
    fixed_p, selector = _parse_p_policy(args.p)
    if args.hypothesis == "composite":
        fit = fit_flm(xs, ys, EstimatorConfig(kind=args.estimator, p=fixed_p, selector=selector))
        residuals, annihilator = fit.residuals, fit.annihilator
    else:
        basis = _simple_basis(xs, ys, args.estimator, fixed_p, selector)
        beta0 = beta0 or BetaFunction.zero(xs.grid)
        residuals, _ = residuals_simple(xs, ys, beta0, basis)
        annihilator = None
    diag = compute_diagnostic(
        xs, residuals, annihilator=annihilator, G=args.G, B=args.B, seed=args.seed
    )
    io.write_diagnostic(diag, args.out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "test":
            return _cmd_test(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_diagnose(args)
    except (ParseError, ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
