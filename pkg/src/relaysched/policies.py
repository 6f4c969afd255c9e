"""Per-slot adaptive scheduling: differential backlog and a smoothed variant.

Links are flattened into a canonical order: line link k+1 is index k; diamond
hop (p, j) is index 2*(p-1) + (j-1). Queue vectors cover nodes 0..N (source
plus relays); the destination queue is identically zero. The plain policy (bp)
activates the feasible link set maximizing backlog-differential times rate;
the smoothed variant (newbp) replaces backlogs with a one-step linear
prediction from virtual queues and charges a quadratic cost on rate changes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from relaysched.topology import LINE, Network

TIE_TOL = 1e-9


@dataclass(frozen=True)
class SlotDecision:
    """Activation bits and integer rates per link, canonical order."""

    active: tuple[int, ...]
    rates: tuple[int, ...]


@dataclass(frozen=True)
class PolicyParams:
    """Smoothed-policy knobs: step size rho, memory tau, per-link beta >= 0.

    beta None picks the built-in defaults for the 4-link line and the 4-path
    diamond and zeros elsewhere.
    """

    rho: float = 1.0
    tau: float = 1.0
    beta: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.rho <= 0 or self.tau <= 0:
            raise ValueError("rho and tau must be positive")
        if self.beta is not None and any(b < 0 for b in self.beta):
            raise ValueError("beta entries must be nonnegative")

    def beta_for(self, net: Network) -> tuple[float, ...]:
        if self.beta is not None:
            if len(self.beta) != net.n_links:
                raise ValueError("beta length does not match the link count")
            return self.beta
        if net.kind == LINE and net.n_links == 4:
            return (0.3, 0.2, 0.1, 0.0)
        if net.kind != LINE and net.n_relays == 4:
            return (0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 16.0, 0.0)
        return (0.0,) * net.n_links


@dataclass(frozen=True)
class WeightState:
    """Per-slot weights plus the memory the smoothed policy carries over.

    w: plain differential-backlog weights. z/w_new: predicted node backlogs
    and the differentials derived from them. v_prev/v_prev2 are the virtual
    queues after the last two updates; r_prev the rates served last slot.
    """

    net: Network
    w: tuple[float, ...] | None = None
    z: tuple[float, ...] | None = None
    w_new: tuple[float, ...] | None = None
    r_prev: tuple[int, ...] = ()
    v_prev: tuple[float, ...] = ()
    v_prev2: tuple[float, ...] = ()


def initial_weight_state(net: Network) -> WeightState:
    """All-zero state: empty network, no history."""
    nodes = net.n_relays + 1
    return WeightState(
        net=net,
        r_prev=(0,) * net.n_links,
        v_prev=(0.0,) * nodes,
        v_prev2=(0.0,) * nodes,
    )


def _check_queues(net: Network, queues) -> None:
    if len(queues) != net.n_relays + 1:
        raise ValueError("queue vector must cover the source and every relay")
    if any(q < 0 for q in queues):
        raise ValueError("backlogs cannot be negative")


def bp_weights(net: Network, queues) -> WeightState:
    """Differential backlog per link, floored at zero."""
    _check_queues(net, queues)
    if net.kind == LINE:
        last = len(queues) - 1
        w = tuple(
            float(max(queues[k] - (queues[k + 1] if k < last else 0), 0))
            for k in range(net.n_links)
        )
    else:
        w = []
        for p in range(net.n_relays):
            w.append(float(max(queues[0] - queues[p + 1], 0)))
            w.append(float(queues[p + 1]))
        w = tuple(w)
    return WeightState(net=net, w=w)


def clipped_rates(net: Network, queues) -> tuple[int, ...]:
    """Packets each link could move this slot: capacity capped by tail backlog."""
    _check_queues(net, queues)
    if net.kind == LINE:
        return tuple(min(q, c) for q, c in zip(queues, net.caps))
    rates = []
    for p in range(net.n_relays):
        rates.append(min(queues[0], net.caps[p][0]))
        rates.append(min(queues[p + 1], net.caps[p][1]))
    return tuple(rates)


def feasible_activation(net: Network, active) -> bool:
    """Half duplex and single beam: every node on at most one active link."""
    if len(active) != net.n_links:
        return False
    if net.kind == LINE:
        return all(not (a and b) for a, b in zip(active, active[1:]))
    first = sum(active[0::2])
    second = sum(active[1::2])
    both = any(active[2 * p] and active[2 * p + 1] for p in range(net.n_relays))
    return first <= 1 and second <= 1 and not both


def solve_max_weight(net: Network, on_value, off_value) -> tuple[int, ...]:
    """Feasible activation maximizing sum(on if active else off) per link.

    Ties within 1e-9 resolve to the fewest active links, then to the
    lexicographically smallest activation vector. Lines use dynamic
    programming along the link path; diamonds enumerate the empty set, single
    links, and first-hop/second-hop pairs on distinct relays.
    """
    if len(on_value) != net.n_links or len(off_value) != net.n_links:
        raise ValueError("value vectors must cover every link")
    if net.kind == LINE:
        return _solve_line(on_value, off_value)
    return _solve_diamond(net.n_relays, on_value, off_value)


def _better(a, b) -> bool:
    # (objective, active-link count): larger objective wins, tolerance ties
    # fall back to fewer links
    if a[0] > b[0] + TIE_TOL:
        return True
    if b[0] > a[0] + TIE_TOL:
        return False
    return a[1] < b[1]


def _solve_line(on, off):
    n = len(on)
    # best[i][prev]: optimum over links i.. given whether link i-1 is active
    best = [[None, None] for _ in range(n + 1)]
    best[n][0] = best[n][1] = (0.0, 0)
    for i in range(n - 1, -1, -1):
        for prev in (0, 1):
            skip = (off[i] + best[i + 1][0][0], best[i + 1][0][1])
            if prev == 0:
                take = (on[i] + best[i + 1][1][0], best[i + 1][1][1] + 1)
                if _better(take, skip):
                    best[i][prev] = take
                    continue
            best[i][prev] = skip
    active = []
    prev = 0
    for i in range(n):
        choice = 0
        if prev == 0:
            skip = (off[i] + best[i + 1][0][0], best[i + 1][0][1])
            take = (on[i] + best[i + 1][1][0], best[i + 1][1][1] + 1)
            if _better(take, skip):
                choice = 1
        active.append(choice)
        prev = choice
    return tuple(active)


def _solve_diamond(n_paths, on, off):
    links = 2 * n_paths
    base = sum(off)
    gain = [o - f for o, f in zip(on, off)]

    best = (base, 0, (0,) * links)
    for cand in _diamond_candidates(n_paths, links):
        val = base + sum(gain[i] for i in cand)
        count = len(cand)
        if _better((val, count), best[:2]) or (
            not _better(best[:2], (val, count))
            and count == best[1]
            and _activation(cand, links) < best[2]
        ):
            best = (val, count, _activation(cand, links))
    return best[2]


def _activation(indices, links):
    row = [0] * links
    for i in indices:
        row[i] = 1
    return tuple(row)


def _diamond_candidates(n_paths, links):
    for i in range(links):
        yield (i,)
    for p in range(n_paths):
        for q in range(n_paths):
            if p != q:
                yield (2 * p, 2 * q + 1)


def bp_decide(net: Network, queues) -> SlotDecision:
    """One slot of the differential-backlog policy."""
    w = bp_weights(net, queues).w
    rates = clipped_rates(net, queues)
    on = tuple(wi * ri for wi, ri in zip(w, rates))
    active = solve_max_weight(net, on, (0.0,) * len(on))
    return SlotDecision(active, tuple(r if a else 0 for a, r in zip(active, rates)))


def newbp_weights(state: WeightState, params: PolicyParams) -> WeightState:
    """Predicted node backlogs z and the per-link differentials they induce.

    z extrapolates the virtual queue one step: (1 + 1/tau) * V(t-1) -
    (1/tau) * V(t-2). Unlike the plain weights these may be negative.
    """
    net = state.net
    scale = 1.0 / params.tau
    z = tuple(
        (1.0 + scale) * a - scale * b
        for a, b in zip(state.v_prev, state.v_prev2)
    )
    if net.kind == LINE:
        last = len(z) - 1
        w_new = tuple(
            z[k] - (z[k + 1] if k < last else 0.0) for k in range(net.n_links)
        )
    else:
        w_new = []
        for p in range(net.n_relays):
            w_new.append(z[0] - z[p + 1])
            w_new.append(z[p + 1])
        w_new = tuple(w_new)
    return replace(state, z=z, w_new=w_new)


def newbp_decide(net: Network, queues, state: WeightState,
                 params: PolicyParams) -> SlotDecision:
    """One slot of the smoothed policy.

    An active link is worth w_new * rate minus (rho*beta/2) times the squared
    rate change; an idle link still pays (rho*beta/2) * r_prev^2 for dropping
    to zero. With beta = 0 this reduces to the plain policy built on w_new.
    """
    rates = clipped_rates(net, queues)
    w_new = newbp_weights(state, params).w_new
    beta = params.beta_for(net)
    half = 0.5 * params.rho
    on = tuple(
        w * r - half * b * (r - rp) ** 2
        for w, r, b, rp in zip(w_new, rates, beta, state.r_prev)
    )
    off = tuple(-half * b * rp * rp for b, rp in zip(beta, state.r_prev))
    active = solve_max_weight(net, on, off)
    return SlotDecision(active, tuple(r if a else 0 for a, r in zip(active, rates)))


def virtual_update(state: WeightState, params: PolicyParams,
                   departures, arrivals) -> WeightState:
    """Roll the virtual queues forward: V += rho*tau*(arrivals - departures).

    Per node, may go negative; that is what distinguishes them from the real
    backlogs and gives the predictor its pull toward empty queues.
    """
    if len(departures) != len(state.v_prev) or len(arrivals) != len(state.v_prev):
        raise ValueError("departures and arrivals must cover nodes 0..N")
    step = params.rho * params.tau
    v = tuple(
        vp - step * d + step * a
        for vp, d, a in zip(state.v_prev, departures, arrivals)
    )
    return replace(state, v_prev=v, v_prev2=state.v_prev)
