"""Figure rendering for run and sweep outputs.

Uses the file-only Agg backend; every function writes a PNG and returns the
path it wrote. Inputs are the plain report-row dicts and histogram tuples
the metrics layer produces, so rendering needs no trace access.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def plot_backlog_vs_rate(rows, out_path, capacity_value=None) -> str:
    """Average sum backlog against source rate, one curve per scheduler.

    Seed repetitions at the same rate are averaged; NaN rows from failed
    runs are skipped. A dashed vertical line marks capacity when given.
    """
    by_sched: dict[str, dict[float, list[float]]] = {}
    for row in rows:
        value = float(row["avg_sum_backlog"])
        if math.isnan(value):
            continue
        rates = by_sched.setdefault(row["scheduler"], {})
        rates.setdefault(float(row["rate"]), []).append(value)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for sched, rates in by_sched.items():
        xs = sorted(rates)
        ys = [sum(rates[x]) / len(rates[x]) for x in xs]
        ax.plot(xs, ys, marker="o", label=sched)
    if capacity_value is not None:
        ax.axvline(float(capacity_value), linestyle="--", color="gray",
                   linewidth=1, label="capacity")
    ax.set_xlabel("source rate (packets/slot)")
    ax.set_ylabel("average sum backlog (packets)")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return str(out_path)


def plot_delay_cdf(curves, out_path) -> str:
    """Empirical delay CDFs; curves maps a label to histogram rows
    (delay_slots, count, path_id)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for label, hist in curves.items():
        totals: dict[int, int] = {}
        for delay, count, _ in hist:
            totals[delay] = totals.get(delay, 0) + count
        if not totals:
            continue
        xs = sorted(totals)
        mass = sum(totals.values())
        acc = 0
        ys = []
        for x in xs:
            acc += totals[x]
            ys.append(acc / mass)
        ax.step(xs, ys, where="post", label=label)
    ax.set_xlabel("end-to-end delay (slots)")
    ax.set_ylabel("CDF")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return str(out_path)
