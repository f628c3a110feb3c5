"""Command-line interface: simulate, campaign, validate.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .config import ARMS, ConfigError, builtin_scenarios, load_scenario, validate_file


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blimpsim",
        description="Buoyant-glider simulator with wind-aware receding-horizon "
                    "estimation and control.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one episode")
    sim.add_argument("--scenario", required=True,
                     help="scenario file or builtin name "
                          f"({', '.join(builtin_scenarios())})")
    sim.add_argument("--arm", choices=ARMS, default=None,
                     help="controller arm (default: scenario file)")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--no-plots", action="store_true",
                     help="skip figure rendering")
    sim.add_argument("--solver-trace", default=None,
                     help="append per-solve diagnostics to this CSV")

    camp = sub.add_parser("campaign", help="run a scenario x arm matrix")
    camp.add_argument("--matrix", required=True, help="campaign matrix TOML")
    camp.add_argument("--trials", type=int, default=10)
    camp.add_argument("--out", required=True)
    camp.add_argument("--no-plots", action="store_true")

    val = sub.add_parser("validate", help="schema-check a config file")
    val.add_argument("--config", required=True)
    return parser


def cmd_simulate(args) -> int:
    from .harness import run_episode
    from .plots import episode_figure

    scenario = load_scenario(args.scenario, arm=args.arm, seed=args.seed)
    trace = [] if args.solver_trace else None
    log, metrics = run_episode(scenario, solver_trace=trace)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"episode_{scenario.name}_{scenario.arm}_s{scenario.seed}.csv"
    log.to_csv(csv_path)
    if trace:
        with open(args.solver_trace, "a", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["solver", "t", "iteration", "cost", "lambda",
                             "step_norm"])
            writer.writerows(trace)
    if not args.no_plots:
        episode_figure(log, csv_path.with_suffix(".png"),
                       launch_duration=scenario.launch_duration)
    print(f"episode written to {csv_path}")
    print(f"termination: {metrics.termination} after {metrics.duration:.2f} s; "
          f"final cRMSE y={metrics.final_crmse_y:.3f} m, "
          f"yaw={metrics.final_crmse_yaw:.4f} rad")
    return 0


def cmd_campaign(args) -> int:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    from .harness import run_campaign
    from .plots import render_campaign_figures

    try:
        with open(args.matrix, "rb") as fh:
            matrix = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"matrix file not found: {args.matrix}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {args.matrix}: {exc}")
    scenarios = matrix.get("scenarios")
    arms = matrix.get("arms", list(ARMS))
    if not scenarios:
        raise ConfigError("matrix file must list 'scenarios'")
    for arm in arms:
        if arm not in ARMS:
            raise ConfigError(f"unknown arm {arm!r} in matrix")
    for spec in scenarios:
        load_scenario(str(spec))  # validate before any simulation
    master_seed = int(matrix.get("master_seed", 0))

    cells = run_campaign(scenarios, arms, trials=args.trials,
                         master_seed=master_seed, out_dir=args.out)
    failures = sum(c.summary_row()["failed"] for c in cells)
    if not args.no_plots:
        render_campaign_figures(cells, args.out)
    print(f"campaign complete: {len(cells)} cells x {args.trials} trials; "
          f"{failures} failed episodes; summary in {Path(args.out) / 'summary.csv'}")
    for cell in cells:
        row = cell.summary_row()
        print(f"  {row['scenario']:>24s} {row['arm']:>9s}: "
              f"cRMSE_y={row['mean_crmse_y']:.3f}±{row['std_crmse_y']:.3f} "
              f"cRMSE_yaw={row['mean_crmse_yaw']:.4f} "
              f"lateral={row['n_lateral_limit']}/{row['completed']}")
    return 0


def cmd_validate(args) -> int:
    print(validate_file(args.config))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "campaign":
            return cmd_campaign(args)
        if args.command == "validate":
            return cmd_validate(args)
        return 1
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
