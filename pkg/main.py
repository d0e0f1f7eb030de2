"""
shrinkbench: Main Entry Point

Run with:
    python main.py simulate --preset table1 --out results/table1
    python main.py simulate --p 10 --r 0.9 --k 3 --estimators lasso,alasso,scad
    python main.py risk --p 10 --sigma2 1 --trcinv 10 --grid 0:50 --dominance
    python main.py plot --table results/table1/table.csv

Commands:
    simulate   Monte Carlo relative-efficiency table (table.csv, manifest.json)
    risk       analytic ADB / ADQR curves (risk.csv, optional dominance.json)
    plot       SVG relative-efficiency chart from a table.csv

Exit codes: 2 for configuration errors, 3 for numerical failures.
"""
import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from analysis.risk import (
    RiskContext,
    dominance_report,
    optimal_kappa,
    risk_ipt,
    risk_lse,
    risk_prse,
    risk_pte,
    risk_re,
    risk_ridge,
    risk_stein,
)
from environment.design import Delta2Mapping
from simulation.config import PRESETS, SimConfig, get_preset, parse_estimators, parse_kappa
from simulation.engine import run_designs
from utils.errors import ShrinkBenchError
from utils.helpers import configure_logging, format_value, parse_grid
from visualization.plot import X_AXES, plot_table
from visualization.report import RunManifest, write_dominance, write_risk_table, write_table

logger = logging.getLogger("shrinkbench")


# ------------------------------------------------------------------ #
#  simulate                                                             #
# ------------------------------------------------------------------ #

def build_configs(args) -> list:
    """Preset designs (or one flag-built design) with CLI flags applied on top."""
    overrides = {
        "n": args.n,
        "p": args.p,
        "k": args.k,
        "r": args.r,
        "reps": args.reps,
        "sigma": args.sigma,
        "seed": args.seed,
        "delta2_grid": parse_grid(args.grid) if args.grid else None,
        "estimators": parse_estimators(args.estimators) if args.estimators else None,
        "fixed_design": True if args.fixed_design else None,
        "delta2_mapping": Delta2Mapping(args.delta2_mapping) if args.delta2_mapping else None,
        "folds": args.folds,
    }
    if args.preset:
        bases = get_preset(args.preset).configs
    else:
        bases = (SimConfig(),)
    configs = [cfg.with_overrides(**overrides) for cfg in bases]
    if args.kappa:
        kappa = parse_kappa(args.kappa)
        configs = [replace(cfg, kappa=kappa) for cfg in configs]
    return configs


def cmd_simulate(args) -> int:
    configs = build_configs(args)
    out = Path(args.out)
    started = time.perf_counter()
    table = run_designs(configs, args.workers)
    write_table(table, out / "table.csv")
    RunManifest.for_run(configs, args.preset, time.perf_counter() - started).write(out / "manifest.json")
    return 0


# ------------------------------------------------------------------ #
#  risk                                                                 #
# ------------------------------------------------------------------ #

def risk_rows(ctx: RiskContext) -> list:
    reports = [risk_lse(ctx), risk_re(ctx), risk_pte(ctx)]
    if ctx.p >= 3:
        reports += [risk_stein(ctx), risk_prse(ctx), risk_ipt(ctx)]
    reports.append(risk_ridge(ctx, optimal_kappa(ctx.p, ctx.delta2)))
    return [(ctx.delta2, report) for report in reports]


def cmd_risk(args) -> int:
    grid = parse_grid(args.grid)
    trcinv = float(args.p) if args.trcinv is None else args.trcinv
    contexts = [RiskContext(args.p, trcinv, d2, args.sigma2, args.alpha) for d2 in grid]
    rows = [row for ctx in contexts for row in risk_rows(ctx)]
    out = Path(args.out)
    write_risk_table(rows, out / "risk.csv")
    if args.dominance:
        eigs = parse_grid(args.c_inv_eigenvalues) if args.c_inv_eigenvalues else None
        report = dominance_report(contexts, eigs)
        write_dominance(report, out / "dominance.json")
        for comp in report.comparisons:
            summary = ", ".join(f"[{format_value(lo)}, {format_value(hi)}] {winner}"
                                for lo, hi, winner in comp.regions)
            logger.info("%s vs %s: %s", comp.first, comp.second, summary)
    return 0


# ------------------------------------------------------------------ #
#  plot                                                                 #
# ------------------------------------------------------------------ #

def cmd_plot(args) -> int:
    table = Path(args.table)
    out = Path(args.out) if args.out else table.with_name("plot.svg")
    plot_table(table, out, x=args.x, y_cap=args.y_cap, title=args.title)
    return 0


# ------------------------------------------------------------------ #
#  Argument parsing                                                     #
# ------------------------------------------------------------------ #

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shrinkbench",
        description="Shrinkage, pretest and penalty estimators: simulation and analytic risk.",
    )
    parser.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo relative-efficiency table")
    sim.add_argument("--preset", choices=sorted(PRESETS))
    sim.add_argument("--n", type=int)
    sim.add_argument("--p", type=int)
    sim.add_argument("--k", type=int)
    sim.add_argument("--r", type=float)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--sigma", type=float)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--grid", help="'default', 'a:b', 'a:b:step' or a comma list of Δ² values")
    sim.add_argument("--estimators", help="e.g. lse,re,pte:0.15,ipt,s,s+,rr,lasso,alasso,scad,en25")
    sim.add_argument("--out", default="results")
    sim.add_argument("--fixed-design", action="store_true",
                     help="draw X once per design instead of every replication")
    sim.add_argument("--delta2-mapping", choices=[m.value for m in Delta2Mapping])
    sim.add_argument("--kappa", help="'plugin' or 'fixed:<value>'")
    sim.add_argument("--folds", type=int)
    sim.add_argument("--workers", type=int, help="worker processes (capped by SHRINKBENCH_THREADS)")
    sim.set_defaults(handler=cmd_simulate)

    risk = sub.add_parser("risk", help="analytic ADB / ADQR curves")
    risk.add_argument("--p", type=int, default=10)
    risk.add_argument("--sigma2", type=float, default=1.0)
    risk.add_argument("--trcinv", type=float, help="tr C^-1 (default p, i.e. C = I)")
    risk.add_argument("--alpha", type=float, default=0.05)
    risk.add_argument("--grid", default="default")
    risk.add_argument("--out", default="results")
    risk.add_argument("--dominance", action="store_true", help="also write dominance.json")
    risk.add_argument("--c-inv-eigenvalues", help="comma list for the Stein dominance condition")
    risk.set_defaults(handler=cmd_risk)

    plot = sub.add_parser("plot", help="SVG chart from a table.csv")
    plot.add_argument("--table", default="results/table.csv")
    plot.add_argument("--out", help="SVG path (default: plot.svg beside the table)")
    plot.add_argument("--x", choices=X_AXES, default="delta2")
    plot.add_argument("--y-cap", type=float)
    plot.add_argument("--title")
    plot.set_defaults(handler=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except ShrinkBenchError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
