"""Command line front end.

Subcommands mirror the batch operations: single runs with CSV/SVG output,
Monte-Carlo sweeps, design-assumption verification, and worst-case gain
design. Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 failed verification in --check mode.
"""

import argparse
import sys
from pathlib import Path

from . import config, hybrid, observers, runner, svgplot


def _cmd_run(args) -> int:
    cfg = config.load_config(args.config)
    res = runner.run_scenario(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.config).stem
    csv_path = out / f"{stem}_trace.csv"
    runner.write_trace_csv(csv_path, res)
    print(res.report)
    print(f"trace: {csv_path}")
    if args.svg:
        svg_path = out / f"{stem}.svg"
        svgplot.write_run_svg(svg_path, *runner.run_series(res), title=stem)
        print(f"figure: {svg_path}")
    return 0


def _cmd_montecarlo(args) -> int:
    cfg = config.load_config(args.config)
    mc = runner.montecarlo(cfg, runs=args.runs, seed=args.seed,
                           reset=args.reset)
    for rec in mc.records:
        if not rec.ok:
            print(f"run {rec.index}: FAILED: {rec.error}")
    print(mc.aggregate)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = Path(args.config).stem
        csv_path = out / f"{stem}_mc_r{mc.aggregate.reset}.csv"
        runner.write_mc_csv(csv_path, mc)
        print(f"per-run table: {csv_path}")
    return 0


def _cmd_verify(args) -> int:
    cfg = config.load_config(args.config)
    rep = runner.verify_assumptions(cfg)
    for line in rep.lines():
        print(line)
    if args.check and not rep.passed:
        return 4
    return 0


def _cmd_design(args) -> int:
    cfg = config.load_config(args.config)
    outcome = runner.design_gains(cfg, args.bank)
    for line in outcome.lines():
        print(line)
    print(f"gain bank: {args.bank}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hmo",
        description="Supervised multi-observer simulation runner.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single run with CSV trace output")
    p.add_argument("config", help="scenario config file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--svg", action="store_true",
                   help="also render the run summary figure")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("montecarlo", help="batch runs with sampled estimates")
    p.add_argument("config", help="scenario config file")
    p.add_argument("--runs", type=int, default=None,
                   help="override the configured run count")
    p.add_argument("--seed", type=int, default=None,
                   help="override the configured master seed")
    p.add_argument("--reset", type=int, choices=(0, 1), default=None,
                   help="override the reset flag r")
    p.add_argument("--out", default=None,
                   help="directory for the per-run CSV table")
    p.set_defaults(func=_cmd_montecarlo)

    p = sub.add_parser("verify-assumptions",
                       help="check the nominal design conditions")
    p.add_argument("config", help="scenario config file")
    p.add_argument("--check", action="store_true",
                   help="exit 4 when a condition fails")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("design-gains",
                       help="worst-case gain search over the scenario bank")
    p.add_argument("config", help="scenario config file")
    p.add_argument("--bank", required=True, help="output gain bank CSV")
    p.set_defaults(func=_cmd_design)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except config.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except observers.NotHurwitz as exc:
        print(f"design failure: {exc}", file=sys.stderr)
        return 3
    except hybrid.SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
