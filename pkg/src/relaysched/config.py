"""Experiment configuration: one JSON file with four fixed blocks.

Blocks: network (kind, capacities), scheduler (name or names, smoothing
knobs), run (rates, horizon, warmup, seeds, saturated), output (path, plots,
traces). Unknown keys anywhere are rejected outright so typos cannot
silently fall back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from relaysched.engine import NEWBP, SCHEDULERS
from relaysched.policies import PolicyParams
from relaysched.topology import DIAMOND, LINE, Network


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    network: Network
    schedulers: tuple[str, ...]
    policy: PolicyParams | None
    rates: tuple[float, ...]
    horizon: int
    warmup: int
    seeds: tuple[int, ...]
    saturated: bool
    out_dir: str
    plots: bool
    traces: bool


def _require_keys(block: dict, allowed: tuple[str, ...], where: str) -> None:
    unknown = set(block) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(sorted(unknown))}")


def _parse_network(block) -> Network:
    if not isinstance(block, dict):
        raise ConfigError("network block must be an object")
    _require_keys(block, ("kind", "capacities"), "network")
    kind = block.get("kind")
    caps = block.get("capacities")
    if kind not in (LINE, DIAMOND):
        raise ConfigError("network.kind must be 'line' or 'diamond'")
    if not isinstance(caps, list) or not caps:
        raise ConfigError("network.capacities must be a nonempty list")
    try:
        if kind == LINE:
            return Network.line(tuple(caps))
        return Network.diamond(tuple(tuple(pair) for pair in caps))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad capacities: {exc}") from exc


def _parse_scheduler(block) -> tuple[tuple[str, ...], PolicyParams | None]:
    if not isinstance(block, dict):
        raise ConfigError("scheduler block must be an object")
    _require_keys(block, ("name", "rho", "tau", "beta"), "scheduler")
    name = block.get("name", "hc-ec")
    names = tuple(name) if isinstance(name, list) else (name,)
    if not names:
        raise ConfigError("scheduler.name cannot be empty")
    for n in names:
        if n not in SCHEDULERS:
            raise ConfigError(f"unknown scheduler {n!r}")
    if len(set(names)) != len(names):
        raise ConfigError("duplicate scheduler names")
    knobs = {k: block[k] for k in ("rho", "tau", "beta") if k in block}
    if not knobs:
        return names, None
    if NEWBP not in names:
        raise ConfigError("rho/tau/beta apply to the newbp scheduler only")
    if "beta" in knobs:
        knobs["beta"] = tuple(float(b) for b in knobs["beta"])
    try:
        return names, PolicyParams(**knobs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad policy parameters: {exc}") from exc


def _expand_rates(raw) -> tuple[float, ...]:
    if isinstance(raw, list):
        if not raw:
            raise ConfigError("run.rates cannot be empty")
        return tuple(float(r) for r in raw)
    if isinstance(raw, dict):
        _require_keys(raw, ("start", "stop", "step"), "run.rates")
        try:
            start, stop, step = (float(raw[k]) for k in ("start", "stop", "step"))
        except KeyError as exc:
            raise ConfigError("run.rates range needs start, stop, step") from exc
        if step <= 0 or stop < start:
            raise ConfigError("run.rates range must move forward")
        out = []
        value = start
        while value <= stop + 1e-9:
            out.append(round(value, 12))
            value += step
        return tuple(out)
    raise ConfigError("run.rates must be a list or a start/stop/step object")


def _parse_run(block) -> tuple[tuple[float, ...], int, int, tuple[int, ...], bool]:
    if not isinstance(block, dict):
        raise ConfigError("run block must be an object")
    _require_keys(block, ("rates", "horizon", "warmup", "seeds", "saturated"),
                  "run")
    rates = _expand_rates(block.get("rates", [1.0]))
    horizon = block.get("horizon", 10_000)
    warmup = block.get("warmup", 0)
    seeds = block.get("seeds", [0])
    saturated = block.get("saturated", False)
    if not isinstance(horizon, int) or not isinstance(warmup, int):
        raise ConfigError("run.horizon and run.warmup must be integers")
    if not isinstance(seeds, list) or not seeds or not all(
            isinstance(s, int) for s in seeds):
        raise ConfigError("run.seeds must be a nonempty list of integers")
    if not isinstance(saturated, bool):
        raise ConfigError("run.saturated must be a boolean")
    return rates, horizon, warmup, tuple(seeds), saturated


def _parse_output(block) -> tuple[str, bool, bool]:
    if not isinstance(block, dict):
        raise ConfigError("output block must be an object")
    _require_keys(block, ("path", "plots", "traces"), "output")
    path = block.get("path", ".")
    plots = block.get("plots", True)
    traces = block.get("traces", False)
    if not isinstance(path, str):
        raise ConfigError("output.path must be a string")
    if not isinstance(plots, bool) or not isinstance(traces, bool):
        raise ConfigError("output.plots and output.traces must be booleans")
    return path, plots, traces


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Cross-field checks, re-run after command-line overrides."""
    for name in cfg.schedulers:
        if name not in SCHEDULERS:
            raise ConfigError(f"unknown scheduler {name!r}")
    if cfg.policy is not None and NEWBP not in cfg.schedulers:
        raise ConfigError("rho/tau/beta apply to the newbp scheduler only")
    if cfg.horizon < 1:
        raise ConfigError("run.horizon must be positive")
    if not 0 <= cfg.warmup < cfg.horizon:
        raise ConfigError("run.warmup must lie inside the horizon")
    if any(r < 0 for r in cfg.rates):
        raise ConfigError("run.rates cannot be negative")
    if not cfg.rates:
        raise ConfigError("run.rates cannot be empty")
    return cfg


def parse_config(data) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be an object")
    _require_keys(data, ("network", "scheduler", "run", "output"), "top-level")
    if "network" not in data:
        raise ConfigError("network block is required")
    network = _parse_network(data["network"])
    schedulers, policy = _parse_scheduler(data.get("scheduler", {}))
    rates, horizon, warmup, seeds, saturated = _parse_run(data.get("run", {}))
    out_dir, plots, traces = _parse_output(data.get("output", {}))
    return validate(ExperimentConfig(
        network=network,
        schedulers=schedulers,
        policy=policy,
        rates=rates,
        horizon=horizon,
        warmup=warmup,
        seeds=seeds,
        saturated=saturated,
        out_dir=out_dir,
        plots=plots,
        traces=traces,
    ))


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(data)


def serialize_config(cfg: ExperimentConfig) -> dict:
    """Inverse of parse_config up to semantic identity."""
    if cfg.network.kind == LINE:
        caps = list(cfg.network.caps)
    else:
        caps = [list(pair) for pair in cfg.network.caps]
    scheduler: dict = {"name": list(cfg.schedulers)}
    if cfg.policy is not None:
        scheduler["rho"] = cfg.policy.rho
        scheduler["tau"] = cfg.policy.tau
        if cfg.policy.beta is not None:
            scheduler["beta"] = list(cfg.policy.beta)
    return {
        "network": {"kind": cfg.network.kind, "capacities": caps},
        "scheduler": scheduler,
        "run": {
            "rates": list(cfg.rates),
            "horizon": cfg.horizon,
            "warmup": cfg.warmup,
            "seeds": list(cfg.seeds),
            "saturated": cfg.saturated,
        },
        "output": {"path": cfg.out_dir, "plots": cfg.plots,
                   "traces": cfg.traces},
    }
