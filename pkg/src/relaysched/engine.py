"""Slotted-time packet simulator for line and diamond relay networks.

One slot: snapshot backlogs, pick an activation (static cycle or adaptive
policy), move packets along active links FIFO, then append the slot's
external arrivals at the source. A packet arriving in slot t therefore
becomes eligible in slot t+1. Deliveries are stamped with the slot they
crossed the last hop, so delay = delivered_slot - created_slot.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from relaysched.coloring import (
    build_plan,
    ec_baseline_color,
    hc_ec_color,
    schedule_matrix,
)
from relaysched.policies import (
    PolicyParams,
    SlotDecision,
    bp_decide,
    feasible_activation,
    initial_weight_state,
    newbp_decide,
    virtual_update,
)
from relaysched.topology import LINE, Network, capacity

HC_EC = "hc-ec"
EC = "ec"
BP = "bp"
NEWBP = "newbp"
SCHEDULERS = (HC_EC, EC, BP, NEWBP)


@dataclass(frozen=True)
class SimConfig:
    """Everything a run needs; immutable so sweeps can share and pickle it."""

    network: Network
    scheduler: str
    arrival_rate: float = 0.0
    horizon: int = 1000
    warmup: int = 0
    seed: int = 0
    policy: PolicyParams | None = None
    saturated: bool = False

    def __post_init__(self):
        if self.scheduler not in SCHEDULERS:
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        if self.scheduler == EC and self.network.kind != LINE:
            raise ValueError("the interval baseline only covers line networks")
        if self.policy is not None and self.scheduler != NEWBP:
            raise ValueError("policy parameters only apply to the smoothed policy")
        if self.horizon < 1:
            raise ValueError("horizon must be at least one slot")
        if not 0 <= self.warmup < self.horizon:
            raise ValueError("warmup must lie inside the horizon")
        if self.arrival_rate < 0:
            raise ValueError("arrival rate cannot be negative")


@dataclass(frozen=True, eq=False)
class SimTrace:
    """Run output: slot-start backlogs, activations, and delivered packets.

    u_history has horizon+1 rows (the last is the final state); delivered
    holds (packet id, created slot, delivered slot, path id) with path id 0
    on lines and the 1-based relay on diamonds.
    """

    config: SimConfig
    u_history: np.ndarray
    active_history: np.ndarray
    arrivals_history: np.ndarray
    delivered: tuple[tuple[int, int, int, int], ...]
    arrivals_total: int


def link_endpoints(net: Network) -> tuple[tuple[int, int, int, int], ...]:
    """Canonical per-link (tail, head, capacity, path_id); head -1 = destination."""
    if net.kind == LINE:
        last = net.n_links - 1
        return tuple(
            (k, k + 1 if k < last else -1, c, 0) for k, c in enumerate(net.caps)
        )
    out = []
    for p, (l1, l2) in enumerate(net.caps):
        out.append((0, p + 1, l1, p + 1))
        out.append((p + 1, -1, l2, p + 1))
    return tuple(out)


class SimState:
    """Mutable simulator core: one FIFO of (packet id, birth slot) per node.

    t is the current slot index; the driver advances it between slots.
    """

    __slots__ = ("net", "links", "queues", "t", "delivered", "arrivals_total",
                 "_next_pid")

    def __init__(self, net: Network):
        self.net = net
        self.links = link_endpoints(net)
        self.queues = tuple(deque() for _ in range(net.n_relays + 1))
        self.t = 0
        self.delivered: list[tuple[int, int, int, int]] = []
        self.arrivals_total = 0
        self._next_pid = 0

    def backlogs(self) -> list[int]:
        return [len(q) for q in self.queues]

    def inject(self, count: int) -> None:
        """Admit count fresh packets at the source, born this slot."""
        q = self.queues[0]
        pid = self._next_pid
        t = self.t
        for _ in range(count):
            q.append((pid, t))
            pid += 1
        self._next_pid = pid
        self.arrivals_total += count


def step(state: SimState, decision: SlotDecision) -> tuple[list[int], list[int]]:
    """Apply one slot of moves; returns per-node (departures, arrivals).

    Rejects infeasible activations and rates beyond capacity or backlog.
    Deliveries are stamped with state.t; the caller advances t afterwards.
    """
    if not feasible_activation(state.net, decision.active):
        raise ValueError("activation set violates the one-link-per-node rule")
    nodes = state.net.n_relays + 1
    dep = [0] * nodes
    arr = [0] * nodes
    t = state.t
    for (tail, head, cap, path_id), a, r in zip(
            state.links, decision.active, decision.rates):
        if not a or r <= 0:
            continue
        q = state.queues[tail]
        if r > cap or r > len(q):
            raise ValueError("rate exceeds the link capacity or the backlog")
        dep[tail] += r
        if head < 0:
            out = state.delivered
            for _ in range(r):
                pid, born = q.popleft()
                out.append((pid, born, t, path_id))
        else:
            arr[head] += r
            dst = state.queues[head]
            for _ in range(r):
                dst.append(q.popleft())
    return dep, arr


class _StaticScheduler:
    """Cycles a precomputed activation matrix, clipping rates at backlogs."""

    def __init__(self, net, scheduler):
        plan = build_plan(net, capacity(net) if net.kind != LINE else None)
        color = hc_ec_color(plan) if scheduler == HC_EC else ec_baseline_color(plan)
        matrix = schedule_matrix(plan, color)
        self.n_links = net.n_links
        self.delta = matrix.delta
        if net.kind == LINE:
            canon = [lk.path - 1 for lk in plan.links]
        else:
            canon = [2 * (lk.path - 1) + (lk.hop - 1) for lk in plan.links]
        ends = link_endpoints(net)
        # per cycle slot: the active links as (canonical index, tail, cap)
        self.slots = tuple(
            tuple((canon[j], ends[canon[j]][0], ends[canon[j]][2])
                  for j, bit in enumerate(row) if bit)
            for row in matrix.rows
        )

    def decide(self, t, backlogs) -> SlotDecision:
        active = [0] * self.n_links
        rates = [0] * self.n_links
        for idx, tail, cap in self.slots[t % self.delta]:
            active[idx] = 1
            rates[idx] = min(backlogs[tail], cap)
        return SlotDecision(tuple(active), tuple(rates))

    def after(self, decision, dep, arr):
        pass


class _BPScheduler:
    def __init__(self, net):
        self.net = net

    def decide(self, t, backlogs) -> SlotDecision:
        return bp_decide(self.net, backlogs)

    def after(self, decision, dep, arr):
        pass


class _NewBPScheduler:
    """Smoothed policy with its virtual-queue memory threaded through the run."""

    def __init__(self, net, params):
        self.net = net
        self.params = params if params is not None else PolicyParams()
        self.state = initial_weight_state(net)

    def decide(self, t, backlogs) -> SlotDecision:
        return newbp_decide(self.net, backlogs, self.state, self.params)

    def after(self, decision, dep, arr):
        nxt = virtual_update(self.state, self.params, dep, arr)
        self.state = replace(nxt, r_prev=decision.rates)


def make_scheduler(config: SimConfig):
    if config.scheduler in (HC_EC, EC):
        return _StaticScheduler(config.network, config.scheduler)
    if config.scheduler == BP:
        return _BPScheduler(config.network)
    return _NewBPScheduler(config.network, config.policy)


def run(config: SimConfig) -> SimTrace:
    """Simulate the configured run and collect the full trace.

    Saturated mode ignores the arrival rate and instead tops the source up
    to the largest first-hop capacity at every slot start, which measures
    sustainable throughput rather than stability.
    """
    net = config.network
    state = SimState(net)
    nodes = net.n_relays + 1
    horizon = config.horizon
    u_hist = np.zeros((horizon + 1, nodes), dtype=np.int64)
    act_hist = np.zeros((horizon, net.n_links), dtype=np.uint8)
    arr_hist = np.zeros(horizon, dtype=np.int64)
    if config.saturated:
        arrivals = None
        if net.kind == LINE:
            fill = net.caps[0]
        else:
            fill = max(l1 for l1, _ in net.caps)
    else:
        rng = np.random.default_rng(config.seed)
        arrivals = rng.poisson(config.arrival_rate, size=horizon)
        fill = 0
    sched = make_scheduler(config)
    source = state.queues[0]
    for t in range(horizon):
        state.t = t
        if arrivals is None:
            deficit = fill - len(source)
            if deficit > 0:
                state.inject(deficit)
                arr_hist[t] = deficit
        backlogs = state.backlogs()
        u_hist[t] = backlogs
        decision = sched.decide(t, backlogs)
        dep, arr = step(state, decision)
        act_hist[t] = decision.active
        if arrivals is not None:
            k = int(arrivals[t])
            if k:
                state.inject(k)
                arr[0] += k
                arr_hist[t] = k
        sched.after(decision, dep, arr)
    state.t = horizon
    u_hist[horizon] = state.backlogs()
    return SimTrace(
        config=config,
        u_history=u_hist,
        active_history=act_hist,
        arrivals_history=arr_hist,
        delivered=tuple(state.delivered),
        arrivals_total=state.arrivals_total,
    )
