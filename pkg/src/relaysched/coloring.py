"""Deterministic cyclic schedules for relay networks via proper edge coloring.

A plan expands each link into as many parallel edges as the slots it needs per
cycle; coloring those edges properly with colors {1..delta} yields a conflict
free periodic schedule (color c = slot c of the cycle). The greedy colorer
reproduces a fixed reference assignment; two repair strategies cover the rare
cases where the greedy choice is impossible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations

from relaysched.topology import (
    DIAMOND,
    LINE,
    CapacityResult,
    Network,
    capacity_diamond,
)


class ColoringError(Exception):
    """A proper coloring could not be produced or validated."""


@dataclass(frozen=True)
class PlanLink:
    """One link of a coloring plan.

    multiplicity is the number of active slots the link needs per cycle;
    capacity the packets it moves per active slot. path/hop identify the link
    in the original network (line: path = link index, hop = 0; diamond: path =
    original path index, hop = 1 or 2). Node ids: 0 is the source, 1..N the
    relays, N+1 the destination.
    """

    link_id: str
    tail: int
    head: int
    multiplicity: int
    capacity: int
    path: int
    hop: int


@dataclass(frozen=True)
class ColoringPlan:
    """Link multiplicities plus the cycle geometry (delta slots, M packets)."""

    kind: str
    links: tuple[PlanLink, ...]
    m_common: int
    delta: int
    n_nodes: int


@dataclass(frozen=True)
class Coloring:
    """Color sets per plan link, aligned with plan.links."""

    sets: tuple[frozenset[int], ...]

    def by_link(self, plan: ColoringPlan) -> dict[str, frozenset[int]]:
        return {lk.link_id: s for lk, s in zip(plan.links, self.sets)}


@dataclass(frozen=True)
class ScheduleMatrix:
    """Binary activation matrix: one row per cycle slot, one column per link."""

    delta: int
    slot_share: Fraction
    rows: tuple[tuple[int, ...], ...]


def build_plan_line(net: Network) -> ColoringPlan:
    """Plan for a line: M = lcm of link capacities, link i active M/l_i slots.

    delta is the largest per-relay load n_i + n_{i+1}; a cycle of delta slots
    moving M packets end to end sustains the approximate capacity exactly.
    """
    if net.kind != LINE:
        raise ValueError("build_plan_line expects a line network")
    caps = net.caps
    m = math.lcm(*caps)
    mult = [m // c for c in caps]
    delta = max(mult[i] + mult[i + 1] for i in range(len(caps) - 1))
    links = tuple(
        PlanLink(str(i + 1), i, i + 1, mult[i], caps[i], i + 1, 0)
        for i in range(len(caps))
    )
    return ColoringPlan(LINE, links, m, delta, len(caps) + 1)


def build_plan_diamond(net: Network, cap: CapacityResult) -> ColoringPlan:
    """Plan for a diamond driven by the capacity solution's path fractions.

    Active paths are ordered by decreasing fraction (original order breaks
    ties); zero-fraction paths drop out. Hop (p,j) needs the fraction
    x_p * l_{p,3-j} / (l_{p,1} + l_{p,2}) of the cycle, so M is the smallest
    integer making every such share an integral slot count.
    """
    if net.kind != DIAMOND:
        raise ValueError("build_plan_diamond expects a diamond network")
    x = cap.path_fractions
    if len(x) != net.n_relays:
        raise ValueError("capacity result does not match the network")
    order = sorted((p for p in range(net.n_relays) if x[p] > 0),
                   key=lambda p: (-x[p], p))
    if not order:
        raise ValueError("no active paths in capacity result")
    shares = {}
    for p in order:
        l1, l2 = net.caps[p]
        shares[p] = (x[p] * l2 / (l1 + l2), x[p] * l1 / (l1 + l2))
    m = math.lcm(*(f.denominator for fs in shares.values() for f in fs))
    links = []
    n1_total = n2_total = peak = 0
    n_dst = net.n_relays + 1
    for k, p in enumerate(order, start=1):
        n1, n2 = (int(f * m) for f in shares[p])
        l1, l2 = net.caps[p]
        links.append(PlanLink(f"{k}-1", 0, p + 1, n1, l1, p + 1, 1))
        links.append(PlanLink(f"{k}-2", p + 1, n_dst, n2, l2, p + 1, 2))
        n1_total += n1
        n2_total += n2
        peak = max(peak, n1 + n2)
    delta = max(n1_total, n2_total, peak)
    return ColoringPlan(DIAMOND, tuple(links), m, delta, net.n_relays + 2)


def build_plan(net: Network, cap: CapacityResult | None = None) -> ColoringPlan:
    """Plan for either topology; computes the diamond capacity when omitted."""
    if net.kind == LINE:
        return build_plan_line(net)
    return build_plan_diamond(net, cap if cap is not None else capacity_diamond(net))


class _ColorState:
    """Mutable bookkeeping while coloring: per-node color -> link position."""

    def __init__(self, plan: ColoringPlan):
        self.plan = plan
        self.used = [dict() for _ in range(plan.n_nodes)]
        self.sets = [set() for _ in plan.links]

    def assign(self, pos: int, color: int) -> None:
        lk = self.plan.links[pos]
        self.sets[pos].add(color)
        self.used[lk.tail][color] = pos
        self.used[lk.head][color] = pos

    def unassign(self, pos: int, color: int) -> None:
        lk = self.plan.links[pos]
        self.sets[pos].discard(color)
        del self.used[lk.tail][color]
        del self.used[lk.head][color]

    def free_color(self, pos: int) -> int | None:
        lk = self.plan.links[pos]
        tail, head = self.used[lk.tail], self.used[lk.head]
        for c in range(1, self.plan.delta + 1):
            if c not in tail and c not in head:
                return c
        return None

    def coloring(self) -> Coloring:
        return Coloring(tuple(frozenset(s) for s in self.sets))


def _greedy_pass(state: _ColorState, positions: list[int]) -> int | None:
    """Round-robin the positions, one color per visit; None when complete.

    Returns the first position where no color is free at both endpoints.
    """
    plan = state.plan
    loops = max(plan.links[i].multiplicity for i in positions)
    for _ in range(loops):
        for pos in positions:
            if len(state.sets[pos]) == plan.links[pos].multiplicity:
                continue
            c = state.free_color(pos)
            if c is None:
                return pos
            state.assign(pos, c)
    return None


def _flip_chain(state: _ColorState, pos: int) -> None:
    """Make a color usable at a stuck link by swapping an alternating chain.

    Picks a color a free at the tail and b free at the head (distinct when
    stuck), walks the a/b chain from the head and exchanges the two colors
    along it. The link graph is bipartite, so the chain cannot terminate at
    the tail and a becomes free at both endpoints.
    """
    plan = state.plan
    lk = plan.links[pos]
    a = next(c for c in range(1, plan.delta + 1) if c not in state.used[lk.tail])
    b = next(c for c in range(1, plan.delta + 1) if c not in state.used[lk.head])
    chain = []
    node, color = lk.head, a
    while color in state.used[node]:
        edge = state.used[node][color]
        chain.append((edge, color))
        other = plan.links[edge]
        node = other.head if other.tail == node else other.tail
        color = b if color == a else a
    for edge, color in chain:
        state.unassign(edge, color)
    for edge, color in chain:
        state.assign(edge, b if color == a else a)
    state.assign(pos, a)


def hc_ec_color(plan: ColoringPlan) -> Coloring:
    """Color the plan greedily with the smallest color free at both endpoints.

    Line plans round-robin all links; a stuck link triggers the alternating
    chain repair, which always succeeds. Diamond plans are colored path by
    path; a stuck third path is handed to remark1_repair.
    """
    state = _ColorState(plan)
    if plan.kind == LINE:
        positions = list(range(len(plan.links)))
        while True:
            stuck = _greedy_pass(state, positions)
            if stuck is None:
                break
            _flip_chain(state, stuck)
        return _validated(plan, state.coloring())
    segments = [[i, i + 1] for i in range(0, len(plan.links), 2)]
    for idx, seg in enumerate(segments):
        stuck = _greedy_pass(state, seg)
        if stuck is not None:
            if idx == 2 and len(segments) == 3:
                return remark1_repair(plan, state.coloring())
            raise ColoringError(
                f"greedy coloring stuck at link {plan.links[stuck].link_id}"
            )
    return _validated(plan, state.coloring())


def remark1_check(plan: ColoringPlan) -> bool:
    """Whether the path-by-path greedy is guaranteed to complete.

    True for at most two paths. For three paths, true when either hop of the
    third path fits into the slack the first two paths leave each other:
    n31 <= max(n12-n21, 0) + max(n22-n11, 0) or
    n32 <= max(n11-n22, 0) + max(n21-n12, 0).
    """
    if plan.kind != DIAMOND:
        raise ValueError("remark1_check expects a diamond plan")
    paths = len(plan.links) // 2
    if paths <= 2:
        return True
    if paths > 3:
        return False
    n = [lk.multiplicity for lk in plan.links]
    n11, n12, n21, n22, n31, n32 = n
    return (n31 <= max(n12 - n21, 0) + max(n22 - n11, 0)
            or n32 <= max(n11 - n22, 0) + max(n21 - n12, 0))


def remark1_repair(plan: ColoringPlan, partial: Coloring) -> Coloring:
    """Complete a three-path coloring whose third path cannot be colored.

    Exchanges a bounded number of colors (up to min(n31, n32)) between the
    colors still free for the third path and colors already assigned to the
    first two paths at the same hop, then retries the greedy on the third
    path. Candidates are tried smallest first; the first completion that
    validates wins.
    """
    if plan.kind != DIAMOND or len(plan.links) != 6:
        raise ColoringError("repair applies to three-path diamond plans")
    n31, n32 = plan.links[4].multiplicity, plan.links[5].multiplicity
    budget = 100_000
    for hop in (0, 1):
        shared = plan.links[4 + hop].tail if hop == 0 else plan.links[4 + hop].head
        donors = [0 + hop, 2 + hop]  # same-hop links of paths 1 and 2
        base = _ColorState(plan)
        for i in range(4):
            for c in partial.sets[i]:
                base.assign(i, c)
        avail = [c for c in range(1, plan.delta + 1) if c not in base.used[shared]]
        owned = sorted((c, i) for i in donors for c in base.sets[i])
        for size in range(1, min(n31, n32) + 1):
            for incoming in combinations(avail, size):
                for outgoing in combinations(owned, size):
                    for perm in permutations(incoming):
                        budget -= 1
                        if budget <= 0:
                            raise ColoringError("swap search budget exhausted")
                        done = _try_swap(plan, base, outgoing, perm)
                        if done is not None:
                            return done
    raise ColoringError("no color exchange completes the third path")


def _try_swap(plan, base, outgoing, incoming):
    """Apply one color exchange and retry path 3; None when it fails."""
    applied = []
    ok = True
    for (old, pos), new in zip(outgoing, incoming):
        lk = plan.links[pos]
        if new in base.used[lk.tail] or new in base.used[lk.head]:
            ok = False
            break
        base.unassign(pos, old)
        base.assign(pos, new)
        applied.append((pos, old, new))
    if ok:
        stuck = _greedy_pass(base, [4, 5])
        if stuck is None and validate_coloring(plan, base.coloring()):
            return base.coloring()
        for pos in (4, 5):
            for c in list(base.sets[pos]):
                base.unassign(pos, c)
    for pos, old, new in reversed(applied):
        base.unassign(pos, new)
        base.assign(pos, old)
    return None


def ec_baseline_color(plan: ColoringPlan) -> Coloring:
    """Cyclic contiguous intervals: each link follows right after the previous.

    Line plans only. Link 1 takes colors 1..n_1, link 2 the next n_2 colors,
    and so on modulo delta. Adjacent intervals never collide because delta is
    at least every adjacent multiplicity sum; validation guards the claim.
    """
    if plan.kind != LINE:
        raise ValueError("ec_baseline_color expects a line plan")
    sets = []
    start = 0
    for lk in plan.links:
        sets.append(frozenset((start + j) % plan.delta + 1
                              for j in range(lk.multiplicity)))
        start = (start + lk.multiplicity) % plan.delta
    return _validated(plan, Coloring(tuple(sets)))


def validate_coloring(plan: ColoringPlan, coloring: Coloring) -> bool:
    """Proper and complete: right set sizes, colors in range, no node clash."""
    if len(coloring.sets) != len(plan.links):
        return False
    seen = [set() for _ in range(plan.n_nodes)]
    for lk, colors in zip(plan.links, coloring.sets):
        if len(colors) != lk.multiplicity:
            return False
        for c in colors:
            if not 1 <= c <= plan.delta:
                return False
            if c in seen[lk.tail] or c in seen[lk.head]:
                return False
            seen[lk.tail].add(c)
            seen[lk.head].add(c)
    return True


def _validated(plan: ColoringPlan, coloring: Coloring) -> Coloring:
    if not validate_coloring(plan, coloring):
        raise ColoringError("coloring failed validation")
    return coloring


def schedule_matrix(plan: ColoringPlan, coloring: Coloring) -> ScheduleMatrix:
    """Turn color sets into the per-slot activation matrix and sanity check it.

    Row c activates every link whose color set contains c. Each row must keep
    every node on at most one active link (half duplex plus single-beam).
    """
    rows = []
    for c in range(1, plan.delta + 1):
        row = tuple(1 if c in s else 0 for s in coloring.sets)
        counts = [0] * plan.n_nodes
        for lk, active in zip(plan.links, row):
            if active:
                counts[lk.tail] += 1
                counts[lk.head] += 1
        if any(v > 1 for v in counts):
            raise ColoringError(f"slot {c} activates conflicting links")
        rows.append(row)
    return ScheduleMatrix(plan.delta, Fraction(1, plan.delta), tuple(rows))


# ---------- text formats ----------

def format_coloring(plan: ColoringPlan, coloring: Coloring) -> str:
    """One "link_id: c1,c2,..." line per link, colors ascending."""
    lines = [
        f"{lk.link_id}: " + ",".join(str(c) for c in sorted(s))
        for lk, s in zip(plan.links, coloring.sets)
    ]
    return "\n".join(lines) + "\n"


def parse_coloring(text: str) -> dict[str, frozenset[int]]:
    out = {}
    for line in text.strip().splitlines():
        link_id, _, colors = line.partition(":")
        out[link_id.strip()] = frozenset(
            int(c) for c in colors.split(",") if c.strip()
        )
    return out


def format_schedule(matrix: ScheduleMatrix) -> str:
    """Header "delta=<d> share=1/<d>" then one 0/1 row per slot."""
    lines = [f"delta={matrix.delta} share=1/{matrix.delta}"]
    lines += [" ".join(str(v) for v in row) for row in matrix.rows]
    return "\n".join(lines) + "\n"


def parse_schedule(text: str) -> ScheduleMatrix:
    lines = text.strip().splitlines()
    head = dict(part.split("=") for part in lines[0].split())
    delta = int(head["delta"])
    num, den = head["share"].split("/")
    rows = tuple(tuple(int(v) for v in line.split()) for line in lines[1:])
    if len(rows) != delta:
        raise ValueError("row count does not match delta")
    return ScheduleMatrix(delta, Fraction(int(num), int(den)), rows)
