"""Command-line front end: capacity queries, schedule export, runs, sweeps.

Subcommands read one JSON experiment config (see the config module) and a
handful of override flags. Exit codes: 0 success, 1 configuration problem,
2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from relaysched.coloring import (
    build_plan,
    ec_baseline_color,
    format_coloring,
    format_schedule,
    hc_ec_color,
    schedule_matrix,
)
from relaysched.config import (
    ConfigError,
    ExperimentConfig,
    load_config,
    validate,
)
from relaysched.engine import BP, HC_EC, NEWBP, SimConfig, run
from relaysched.metrics import (
    compute_metrics,
    nan_row,
    report_row,
    write_backlog_csv,
    write_delivered_csv,
    write_histogram_csv,
    write_report_csv,
)
from relaysched.topology import capacity


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    fields = {}
    if args.out is not None:
        fields["out_dir"] = args.out
    if args.seed is not None:
        fields["seeds"] = (args.seed,)
    if args.rate is not None:
        fields["rates"] = (args.rate,)
    if args.horizon is not None:
        fields["horizon"] = args.horizon
    if args.warmup is not None:
        fields["warmup"] = args.warmup
    if args.scheduler is not None:
        fields["schedulers"] = (args.scheduler,)
    if getattr(args, "no_plot", False):
        fields["plots"] = False
    return validate(replace(cfg, **fields)) if fields else cfg


def _out_dir(cfg: ExperimentConfig) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg.out_dir


def _sim_config(cfg: ExperimentConfig, scheduler: str, rate: float,
                seed: int) -> SimConfig:
    return SimConfig(
        network=cfg.network,
        scheduler=scheduler,
        arrival_rate=rate,
        horizon=cfg.horizon,
        warmup=cfg.warmup,
        seed=seed,
        policy=cfg.policy if scheduler == NEWBP else None,
        saturated=cfg.saturated,
    )


def cmd_capacity(cfg: ExperimentConfig) -> int:
    print(capacity(cfg.network).format())
    return 0


def cmd_schedule(cfg: ExperimentConfig) -> int:
    name = cfg.schedulers[0]
    if name in (BP, NEWBP):
        raise ConfigError("adaptive schedulers have no precomputed schedule")
    net = cfg.network
    plan = build_plan(net)
    coloring = hc_ec_color(plan) if name == HC_EC else ec_baseline_color(plan)
    matrix = schedule_matrix(plan, coloring)
    out = _out_dir(cfg)
    color_path = os.path.join(out, f"{net.kind}_{name}_coloring.txt")
    matrix_path = os.path.join(out, f"{net.kind}_{name}_schedule.txt")
    with open(color_path, "w") as fh:
        fh.write(format_coloring(plan, coloring))
    with open(matrix_path, "w") as fh:
        fh.write(format_schedule(matrix))
    print(f"delta={matrix.delta} share=1/{matrix.delta}")
    print(f"wrote {color_path}")
    print(f"wrote {matrix_path}")
    return 0


def _fig_path(out: str, stem: str) -> str:
    return os.path.join(out, stem + ".png")


def cmd_simulate(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    reports = []
    curves: dict[str, tuple] = {}
    for scheduler in cfg.schedulers:
        for rate in cfg.rates:
            merged: list = []
            for seed in cfg.seeds:
                try:
                    sim = _sim_config(cfg, scheduler, rate, seed)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from exc
                trace = run(sim)
                report = compute_metrics(trace)
                reports.append(report)
                tag = f"{scheduler}_r{rate:g}_s{seed}"
                write_histogram_csv(
                    os.path.join(out, f"hist_{tag}.csv"), report)
                if cfg.traces:
                    write_backlog_csv(
                        os.path.join(out, f"backlog_{tag}.csv"), trace)
                    write_delivered_csv(
                        os.path.join(out, f"delivered_{tag}.csv"), trace)
                merged.extend(report.histogram)
            curves[f"{scheduler} rate {rate:g}"] = tuple(merged)
    report_path = os.path.join(out, "report.csv")
    write_report_csv(report_path, reports)
    print(f"wrote {report_path}")
    if cfg.plots:
        from relaysched.figures import plot_delay_cdf

        print(f"wrote {plot_delay_cdf(curves, _fig_path(out, 'delay_cdf'))}")
    return 0


def _sweep_worker(task):
    network, scheduler, rate, seed, horizon, warmup, policy, saturated = task
    sim = SimConfig(
        network=network,
        scheduler=scheduler,
        arrival_rate=rate,
        horizon=horizon,
        warmup=warmup,
        seed=seed,
        policy=policy if scheduler == NEWBP else None,
        saturated=saturated,
    )
    return report_row(compute_metrics(run(sim)))


def cmd_sweep(cfg: ExperimentConfig) -> int:
    """Cross product of schedulers x rates x seeds, one CSV row each.

    Failed runs become NaN rows and the sweep keeps going; row order is
    deterministic regardless of worker completion order.
    """
    out = _out_dir(cfg)
    tasks = [
        (cfg.network, scheduler, rate, seed, cfg.horizon, cfg.warmup,
         cfg.policy, cfg.saturated)
        for scheduler in cfg.schedulers
        for rate in cfg.rates
        for seed in cfg.seeds
    ]
    rows = []
    failures = 0
    with ProcessPoolExecutor(max_workers=os.cpu_count() or 1) as pool:
        futures = [pool.submit(_sweep_worker, task) for task in tasks]
        for task, future in zip(tasks, futures):
            try:
                rows.append(future.result())
            except Exception as exc:
                _, scheduler, rate, seed, horizon, warmup, _, _ = task
                print(f"run failed ({scheduler}, rate {rate:g}, seed {seed}):"
                      f" {exc}", file=sys.stderr)
                rows.append(nan_row(scheduler, cfg.network.kind, rate, seed,
                                    horizon, warmup))
                failures += 1
    sweep_path = os.path.join(out, "sweep.csv")
    write_report_csv(sweep_path, rows)
    print(f"wrote {sweep_path}")
    if cfg.plots:
        from relaysched.figures import plot_backlog_vs_rate

        cap = float(capacity(cfg.network).capacity)
        path = plot_backlog_vs_rate(rows, _fig_path(out, "backlog_vs_rate"),
                                    capacity_value=cap)
        print(f"wrote {path}")
    return 0 if failures < len(tasks) else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaysched",
        description="Relay-network scheduling: capacity, schedules, and "
                    "slotted-time simulation.")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = (
        ("capacity", cmd_capacity, "print the exact network capacity"),
        ("schedule", cmd_schedule, "export a static coloring and matrix"),
        ("simulate", cmd_simulate, "run simulations and write reports"),
        ("sweep", cmd_sweep, "sweep schedulers x rates x seeds in parallel"),
    )
    for name, func, help_text in commands:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True,
                         help="path to the JSON experiment config")
        cmd.add_argument("--out", help="output directory override")
        cmd.add_argument("--seed", type=int, help="replace the seed list")
        cmd.add_argument("--rate", type=float, help="replace the rate list")
        cmd.add_argument("--horizon", type=int, help="horizon override")
        cmd.add_argument("--warmup", type=int, help="warmup override")
        cmd.add_argument("--scheduler", help="replace the scheduler list")
        cmd.add_argument("--no-plot", action="store_true",
                         help="skip figure rendering")
        cmd.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
