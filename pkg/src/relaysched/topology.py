"""Relay network models and exact approximate-capacity computation.

Two half-duplex topologies are supported: a line of N relays chained between
source and destination (N+1 links), and a diamond of N parallel two-hop relay
paths sharing one source and one destination. Link capacities are integer
packets per slot; every capacity here is computed in exact rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product

LINE = "line"
DIAMOND = "diamond"


def _pos_int(value) -> int:
    out = int(value)
    if out != value or out <= 0:
        raise ValueError(f"capacities must be positive integers, got {value!r}")
    return out


@dataclass(frozen=True)
class Network:
    """A relay network.

    kind is "line" or "diamond". Line caps are (l_1, ..., l_{N+1}), one
    integer per link along source -> relay 1 -> ... -> relay N -> destination.
    Diamond caps are ((l_{1,1}, l_{1,2}), ...), one (first-hop, second-hop)
    pair per relay path.
    """

    kind: str
    caps: tuple

    def __post_init__(self):
        if self.kind == LINE:
            caps = tuple(_pos_int(c) for c in self.caps)
            if len(caps) < 2:
                raise ValueError("line network needs at least one relay (two links)")
        elif self.kind == DIAMOND:
            caps = tuple((_pos_int(a), _pos_int(b)) for a, b in self.caps)
            if not caps:
                raise ValueError("diamond network needs at least one path")
        else:
            raise ValueError(f"unknown network kind: {self.kind!r}")
        object.__setattr__(self, "caps", caps)

    @classmethod
    def line(cls, caps) -> "Network":
        return cls(LINE, tuple(caps))

    @classmethod
    def diamond(cls, caps) -> "Network":
        return cls(DIAMOND, tuple(tuple(p) for p in caps))

    @property
    def n_relays(self) -> int:
        return len(self.caps) - 1 if self.kind == LINE else len(self.caps)

    @property
    def n_links(self) -> int:
        return len(self.caps) if self.kind == LINE else 2 * len(self.caps)


@dataclass(frozen=True)
class CapacityResult:
    """Approximate capacity in packets/slot plus per-path data for diamonds.

    capacity is exact; for diamonds, path_fractions holds the activation
    fraction x_p of each path (at most three nonzero) and path_capacities the
    individual two-hop capacities C_p.
    """

    capacity: Fraction
    path_fractions: tuple[Fraction, ...] = ()
    path_capacities: tuple[Fraction, ...] = ()

    def format(self) -> str:
        """Render as "capacity=p/q", with " x=..." appended for diamonds."""
        text = f"capacity={format_fraction(self.capacity)}"
        if self.path_fractions:
            text += " x=" + ",".join(format_fraction(x) for x in self.path_fractions)
        return text


def format_fraction(q: Fraction) -> str:
    """Render a Fraction as "p/q" with the denominator always explicit."""
    return f"{q.numerator}/{q.denominator}"


def link_capacity_from_gain(gain_squared: float) -> float:
    """Shannon rate log2(1 + g^2) of a unit-bandwidth link with power gain g^2."""
    if gain_squared < 0:
        raise ValueError("squared channel gain must be nonnegative")
    return math.log2(1.0 + gain_squared)


def path_capacity(l1: int, l2: int) -> Fraction:
    """Half-duplex capacity l1*l2/(l1+l2) of a two-hop relay path.

    The relay splits its time between receiving at l1 and forwarding at l2;
    the sustainable rate is the harmonic-mean-style combination of the hops.
    """
    if l1 <= 0 or l2 <= 0:
        raise ValueError("hop capacities must be positive")
    return Fraction(l1 * l2, l1 + l2)


def capacity_line(net: Network) -> CapacityResult:
    """Approximate capacity of a line network: the worst adjacent-link pair.

    Relay i forwards across the half-duplex pair (l_i, l_{i+1}), so the
    end-to-end rate is min_i l_i*l_{i+1}/(l_i + l_{i+1}).
    """
    if net.kind != LINE:
        raise ValueError("capacity_line expects a line network")
    caps = net.caps
    c = min(path_capacity(caps[i], caps[i + 1]) for i in range(len(caps) - 1))
    return CapacityResult(capacity=c)


def capacity_diamond(net: Network) -> CapacityResult:
    """Approximate capacity of a diamond network, solved exactly.

    Maximizes sum_p x_p*C_p over per-path activation fractions 0 <= x_p <= 1
    subject to the source and destination time budgets

        sum_p x_p*C_p/l_{p,1} <= 1      sum_p x_p*C_p/l_{p,2} <= 1,

    where C_p = path_capacity(l_{p,1}, l_{p,2}). An optimum activating at most
    three paths always exists, so supports of size <= 3 are enumerated and the
    vertices of each restricted polytope are solved in scaled integer
    arithmetic (exact; Fractions only materialize in the result). Ties resolve
    to the fewest nonzero paths, then to the lexicographically largest x.
    """
    if net.kind != DIAMOND:
        raise ValueError("capacity_diamond expects a diamond network")
    n = net.n_relays
    cp = tuple(path_capacity(a, b) for a, b in net.caps)
    # best = (obj_num, obj_den, nnz, x_num vector, x_den); obj = obj_num/obj_den
    best = (0, 1, 0, (0,) * n, 1)
    for support in combinations(range(n), min(3, n)):
        for cand in _support_vertices(net.caps, support, n):
            if _candidate_better(cand, best):
                best = cand
    num, den, _, xn, xd = best
    x = tuple(Fraction(v, xd) for v in xn)
    return CapacityResult(
        capacity=Fraction(num, den), path_fractions=x, path_capacities=cp
    )


def _support_vertices(caps, support, n):
    """Yield polytope vertices restricted to one support, all in integers.

    Constraint p's coefficients are C_p/l_{p,1} = l_{p,2}/(l_{p,1}+l_{p,2})
    and C_p/l_{p,2} = l_{p,1}/(l_{p,1}+l_{p,2}); scaling by the lcm S of the
    hop sums makes every coefficient integral. Each yielded candidate is
    (obj_num, obj_den, nnz, x_num vector, x_den) with x_p = x_num[p]/x_den.
    """
    k = len(support)
    sums = [caps[p][0] + caps[p][1] for p in support]
    s = math.lcm(*sums)
    a1 = [s * caps[p][1] // sums[j] for j, p in enumerate(support)]
    a2 = [s * caps[p][0] // sums[j] for j, p in enumerate(support)]
    oc = [s * caps[p][0] * caps[p][1] // sums[j] for j, p in enumerate(support)]

    def emit(xs, den):
        # xs indexed by support position, denominator den > 0
        if any(v < 0 or v > den for v in xs):
            return None
        lhs1 = sum(a * v for a, v in zip(a1, xs))
        lhs2 = sum(a * v for a, v in zip(a2, xs))
        if lhs1 > s * den or lhs2 > s * den:
            return None
        g = math.gcd(den, *xs)
        xs = [v // g for v in xs]
        den //= g
        full = [0] * n
        for j, p in enumerate(support):
            full[p] = xs[j]
        obj_num = sum(o * v for o, v in zip(oc, xs))
        return (obj_num, s * den, sum(1 for v in xs if v), tuple(full), den)

    # vertices with no tight budget: every x_p at a bound
    for pat in product((0, 1), repeat=k):
        cand = emit(list(pat), 1)
        if cand:
            yield cand
    # one budget tight, one free variable
    for row in (a1, a2):
        for f in range(k):
            rest = [j for j in range(k) if j != f]
            for pat in product((0, 1), repeat=k - 1):
                r = s - sum(row[j] * v for j, v in zip(rest, pat))
                if r < 0:
                    continue
                den = row[f]
                xs = [0] * k
                for j, v in zip(rest, pat):
                    xs[j] = v * den
                xs[f] = r
                cand = emit(xs, den)
                if cand:
                    yield cand
    # both budgets tight, two free variables
    for f1, f2 in combinations(range(k), 2):
        rest = [j for j in range(k) if j != f1 and j != f2]
        for pat in product((0, 1), repeat=k - 2):
            r1 = s - sum(a1[j] * v for j, v in zip(rest, pat))
            r2 = s - sum(a2[j] * v for j, v in zip(rest, pat))
            det = a1[f1] * a2[f2] - a1[f2] * a2[f1]
            if det == 0:
                continue
            x1 = r1 * a2[f2] - r2 * a1[f2]
            x2 = a1[f1] * r2 - a2[f1] * r1
            if det < 0:
                det, x1, x2 = -det, -x1, -x2
            xs = [0] * k
            for j, v in zip(rest, pat):
                xs[j] = v * det
            xs[f1], xs[f2] = x1, x2
            cand = emit(xs, det)
            if cand:
                yield cand


def _candidate_better(a, b) -> bool:
    """Ordering for LP optima: objective, then fewest paths, then largest x."""
    an, ad, annz, ax, axd = a
    bn, bd, bnnz, bx, bxd = b
    lhs, rhs = an * bd, bn * ad
    if lhs != rhs:
        return lhs > rhs
    if annz != bnnz:
        return annz < bnnz
    for va, vb in zip(ax, bx):
        la, lb = va * bxd, vb * axd
        if la != lb:
            return la > lb
    return False


def capacity(net: Network) -> CapacityResult:
    """Approximate capacity of either topology."""
    return capacity_line(net) if net.kind == LINE else capacity_diamond(net)
