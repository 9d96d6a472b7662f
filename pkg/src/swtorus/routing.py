"""Fault-aware greedy local navigation (reference implementation).

One-level greedy forwards to the alive neighbor closest to the target in
lattice distance; two-level greedy scores a candidate w by
min(dist(w, t), min over alive neighbors u of w, u != current) so that
"neighbors of neighbors" are considered in addition to w itself. The node the
message just came from is never a candidate (one-step memory only). A message
is lost when no candidate exists (dead end) or when its path length would
exceed the hop limit (2 * navigation diameter for faithful runs).

This module is the plain-Python reference used by the tests; the numba kernels
in engine.py implement the same semantics for bulk evaluation and are checked
against it.
"""
from __future__ import annotations

from dataclasses import dataclass

from .topology import Network

BLOCKED = -1

DELIVERED = "delivered"
LOST_DEAD_END = "dead-end"
LOST_HOP_LIMIT = "hop-limit"


@dataclass(frozen=True)
class NavigationPolicy:
    level: int = 2
    hop_limit: int = 1

    def __post_init__(self):
        if self.level not in (1, 2):
            raise ValueError(f"level must be 1 or 2, got {self.level}")
        if self.hop_limit < 1:
            raise ValueError(f"hop_limit must be >= 1, got {self.hop_limit}")


@dataclass
class RoutingOutcome:
    status: str
    path: list[int]
    hops: int

    @property
    def delivered(self) -> bool:
        return self.status == DELIVERED


def _ring_distance(a: int, b: int, L: int) -> int:
    d = abs(a - b)
    return min(d, L - d)


def _dist(v: int, t: int, L: int) -> int:
    return (_ring_distance(v // L, t // L, L)
            + _ring_distance(v % L, t % L, L))


def _displacement_code(cur: int, w: int, L: int) -> int:
    """Canonical displacement of w relative to cur; the deterministic tie-break.

    Lexicographic ((wi-ci) mod L, (wj-cj) mod L) is translation-covariant, so
    symmetric networks stay symmetric under routing (uniform loads on the bare
    torus), unlike a raw node-index order.
    """
    di = (w // L - cur // L) % L
    dj = (w % L - cur % L) % L
    return di * L + dj


def next_hop(net: Network, current: int, previous: int | None, target: int,
             policy: NavigationPolicy) -> int:
    """Best candidate neighbor, or BLOCKED if none is admissible."""
    assert current != target and net.alive[current]
    L = net.config.L
    prev = -1 if previous is None else previous
    best = BLOCKED
    best_score = 1 << 62
    best_code = 1 << 62
    for w in net.neighbors(current):
        w = int(w)
        if w == prev or not net.alive[w]:
            continue
        if w == target:
            return target
        score = _dist(w, target, L)
        if policy.level == 2:
            for u in net.neighbors(w):
                u = int(u)
                if u == current or not net.alive[u]:
                    continue
                du = _dist(u, target, L)
                if du < score:
                    score = du
        code = _displacement_code(current, w, L)
        if score < best_score or (score == best_score and code < best_code):
            best, best_score, best_code = w, score, code
    return best


def route_message(net: Network, source: int, dest: int,
                  policy: NavigationPolicy) -> RoutingOutcome:
    """Iterate next_hop with one-step memory until delivery or loss."""
    if not (net.alive[source] and net.alive[dest]):
        raise ValueError("source and destination must be alive")
    path = [source]
    prev: int | None = None
    cur = source
    hops = 0
    while True:
        if cur == dest:
            return RoutingOutcome(DELIVERED, path, hops)
        if hops == policy.hop_limit:
            return RoutingOutcome(LOST_HOP_LIMIT, path, hops)
        nxt = next_hop(net, cur, prev, dest, policy)
        if nxt == BLOCKED:
            return RoutingOutcome(LOST_DEAD_END, path, hops)
        path.append(nxt)
        prev, cur = cur, nxt
        hops += 1


def navigation_diameter(net: Network, level: int = 2) -> int:
    """Maximum delivered path length over all ordered pairs (intact network).

    Exhaustive reference implementation (O(N^2) routes in pure Python); use
    engine.navigation_diameter for anything beyond small lattices.
    """
    if not net.alive.all():
        raise ValueError("navigation diameter is defined on the intact network")
    N = net.config.N
    policy = NavigationPolicy(level=level, hop_limit=N)
    worst = 0
    for s in range(N):
        for t in range(N):
            if s == t:
                continue
            out = route_message(net, s, t, policy)
            if not out.delivered:
                raise RuntimeError(f"pair ({s}, {t}) undelivered on intact network")
            if out.hops > worst:
                worst = out.hops
    return worst
