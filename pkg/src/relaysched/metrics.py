"""Stability and delay metrics from simulation traces, plus CSV export.

All time averages run over the measured window [warmup, horizon) using
slot-start backlogs, so the sum decomposition avg_sum_backlog = sum of the
per-node averages holds exactly. Delay statistics cover packets delivered
inside the window; delay histograms use one-slot bins.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from relaysched.engine import SimTrace
from relaysched.topology import LINE

# a run counts as stable when the fitted backlog growth per slot stays
# below this; unstable runs get their delay treated as not applicable
STABLE_SLOPE = 0.01

REPORT_COLUMNS = (
    "scheduler", "network", "rate", "seed", "horizon", "warmup",
    "avg_sum_backlog", "effective_rate", "little_delay",
    "mean_delay", "p50", "p95", "p99",
)

HISTOGRAM_COLUMNS = ("delay_slots", "count", "path_id")


@dataclass(frozen=True)
class DelayStats:
    """Per-packet delay summary; NaNs and an empty histogram when nothing
    was delivered in the window."""

    mean: float
    p50: float
    p95: float
    p99: float
    count: int
    histogram: tuple[tuple[int, int, int], ...]


@dataclass(frozen=True)
class MetricsReport:
    scheduler: str
    network: str
    rate: float
    seed: int
    horizon: int
    warmup: int
    avg_sum_backlog: float
    per_node_backlog: tuple[float, ...]
    effective_rate: float
    little_delay: float
    mean_delay: float
    p50: float
    p95: float
    p99: float
    delivered_count: int
    histogram: tuple[tuple[int, int, int], ...]
    path_pmf: tuple[float, ...]
    growth_slope: float
    stable: bool


def _window(trace: SimTrace) -> tuple[int, int]:
    return trace.config.warmup, trace.config.horizon


def backlog_metrics(trace: SimTrace) -> tuple[float, tuple[float, ...]]:
    """Average sum backlog and the per-node split it decomposes into."""
    lo, hi = _window(trace)
    span = hi - lo
    sums = trace.u_history[lo:hi].sum(axis=0)
    per_node = tuple(float(s) / span for s in sums)
    return float(sum(per_node)), per_node


def _window_delays(trace: SimTrace):
    lo, hi = _window(trace)
    return [(done - born, path) for _, born, done, path in trace.delivered
            if lo <= done < hi]


def delay_metrics(trace: SimTrace) -> DelayStats:
    """Mean and tail percentiles of end-to-end delay, with a 1-slot histogram.

    Diamonds get one histogram row per (delay, relay path); lines use
    path id 0 throughout.
    """
    pairs = _window_delays(trace)
    if not pairs:
        nan = float("nan")
        return DelayStats(nan, nan, nan, nan, 0, ())
    delays = np.array([d for d, _ in pairs], dtype=np.int64)
    counts: dict[tuple[int, int], int] = {}
    for d, path in pairs:
        key = (path, d)
        counts[key] = counts.get(key, 0) + 1
    hist = tuple((d, c, path) for (path, d), c in sorted(counts.items()))
    p50, p95, p99 = (float(v) for v in np.percentile(delays, (50, 95, 99)))
    return DelayStats(float(delays.mean()), p50, p95, p99, len(pairs), hist)


def path_pmf(trace: SimTrace) -> tuple[float, ...]:
    """Fraction of delivered packets carried by each relay path."""
    if trace.config.network.kind == LINE:
        raise ValueError("path split applies to diamond networks only")
    n = trace.config.network.n_relays
    pairs = _window_delays(trace)
    if not pairs:
        return (0.0,) * n
    counts = [0] * n
    for _, path in pairs:
        counts[path - 1] += 1
    total = len(pairs)
    return tuple(c / total for c in counts)


def growth_slope(trace: SimTrace) -> float:
    """Least-squares slope of the summed backlog across the window."""
    lo, hi = _window(trace)
    usum = trace.u_history[lo:hi].sum(axis=1)
    t = np.arange(len(usum))
    return float(np.polyfit(t, usum, 1)[0])


def compute_metrics(trace: SimTrace) -> MetricsReport:
    cfg = trace.config
    lo, hi = _window(trace)
    span = hi - lo
    avg, per_node = backlog_metrics(trace)
    arrived = int(trace.arrivals_history[lo:hi].sum())
    eff = arrived / span
    slope = growth_slope(trace)
    stats = delay_metrics(trace)
    little = avg / eff if eff > 0 else float("nan")
    pmf = path_pmf(trace) if cfg.network.kind != LINE else ()
    return MetricsReport(
        scheduler=cfg.scheduler,
        network=cfg.network.kind,
        rate=cfg.arrival_rate,
        seed=cfg.seed,
        horizon=cfg.horizon,
        warmup=cfg.warmup,
        avg_sum_backlog=avg,
        per_node_backlog=per_node,
        effective_rate=eff,
        little_delay=little,
        mean_delay=stats.mean,
        p50=stats.p50,
        p95=stats.p95,
        p99=stats.p99,
        delivered_count=stats.count,
        histogram=stats.histogram,
        path_pmf=pmf,
        growth_slope=slope,
        stable=slope <= STABLE_SLOPE,
    )


def little_check(report: MetricsReport) -> float:
    """Relative gap between the empirical mean delay and backlog / rate.

    Raises on zero traffic; returns NaN for runs flagged unstable, where a
    steady-state delay is not meaningful.
    """
    if report.effective_rate <= 0:
        raise ValueError("no arrivals: delay via backlog ratio is undefined")
    if not report.stable:
        return float("nan")
    w = report.little_delay
    return abs(report.mean_delay - w) / w


def report_row(report: MetricsReport) -> dict:
    return {c: getattr(report, c) for c in REPORT_COLUMNS}


def write_report_csv(path, rows) -> None:
    """Write report rows (MetricsReport or plain dicts) with pinned columns."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for row in rows:
            if isinstance(row, MetricsReport):
                row = report_row(row)
            writer.writerow(row)


def read_report_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise ValueError("unexpected report columns")
        out = []
        for raw in reader:
            row = dict(raw)
            for key in ("rate", "avg_sum_backlog", "effective_rate",
                        "little_delay", "mean_delay", "p50", "p95", "p99"):
                row[key] = float(row[key])
            for key in ("seed", "horizon", "warmup"):
                row[key] = int(row[key])
            out.append(row)
        return out


def write_histogram_csv(path, report: MetricsReport) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTOGRAM_COLUMNS)
        writer.writerows(report.histogram)


def read_histogram_csv(path) -> list[tuple[int, int, int]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader)) != HISTOGRAM_COLUMNS:
            raise ValueError("unexpected histogram columns")
        return [(int(a), int(b), int(c)) for a, b, c in reader]


def write_backlog_csv(path, trace: SimTrace) -> None:
    """Per-slot backlog table "slot,U_0,...,U_N" including the final state."""
    nodes = trace.u_history.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slot"] + [f"U_{i}" for i in range(nodes)])
        for t, row in enumerate(trace.u_history):
            writer.writerow([t] + [int(v) for v in row])


def write_delivered_csv(path, trace: SimTrace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["packet_id", "created_slot", "delivered_slot", "path_id"])
        writer.writerows(trace.delivered)


def nan_row(scheduler: str, network: str, rate: float, seed: int,
            horizon: int, warmup: int) -> dict:
    """Report row for a failed run: identity columns kept, metrics NaN."""
    row = dict(scheduler=scheduler, network=network, rate=rate, seed=seed,
               horizon=horizon, warmup=warmup)
    for col in REPORT_COLUMNS[6:]:
        row[col] = math.nan
    return row
