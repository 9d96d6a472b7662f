"""Metrics over routing outcomes: l2, u/M, forwarding index, load tables.

Conventions:
- node load counts intermediate traversals only (endpoints excluded, lost
  messages contribute the interior of their traversed prefix, multiplicity
  counted), so sum(load) == sum over messages of max(hops - 1, 0);
- l2 averages delivered messages only; the penalized variant assigns lost
  messages a fixed path length (the hop limit by default);
- messages with failed endpoints are excluded from the message set by
  construction rather than counted as losses.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine, routing, seeds
from .routing import NavigationPolicy, RoutingOutcome
from .topology import Network

MODE_ALL_PAIRS = "all-pairs"
MODE_SAMPLED = "sampled"


@dataclass(frozen=True)
class MessageSet:
    """Ordered (source, dest) pairs; all-pairs is implicit (pairs=None)."""

    mode: str
    m: int
    seed: int | None = None
    pairs: np.ndarray | None = None


def build_message_set(net: Network, mode: str = MODE_ALL_PAIRS,
                      m: int | None = None, seed: int | None = None) -> MessageSet:
    """Messages over currently alive nodes: every ordered distinct pair, or a
    uniform sample of m such pairs without replacement (seeded)."""
    A = net.n_alive
    if mode == MODE_ALL_PAIRS:
        return MessageSet(MODE_ALL_PAIRS, A * (A - 1) if A else 0)
    if mode != MODE_SAMPLED:
        raise ValueError(f"unknown message mode {mode!r}")
    if m is None or seed is None:
        raise ValueError("sampled mode needs m and seed")
    admissible = A * (A - 1)
    if m > admissible:
        raise ValueError(f"cannot sample {m} pairs from {admissible} admissible")
    alive_ids = net.alive_ids()
    rng = seeds.rng_from(seed, seeds.MESSAGES)
    picked = np.empty(0, dtype=np.int64)
    while len(picked) < m:
        need = m - len(picked)
        draw = rng.integers(0, admissible, size=need + need // 8 + 16)
        draw = np.concatenate([picked, draw])
        # first-occurrence de-duplication keeps the draw order, so the kept
        # codes are a uniform sample without replacement
        _, first = np.unique(draw, return_index=True)
        picked = draw[np.sort(first)]
    codes = picked[:m]
    s_idx = codes // (A - 1)
    r = codes % (A - 1)
    t_idx = np.where(r < s_idx, r, r + 1)
    pairs = np.stack([alive_ids[s_idx], alive_ids[t_idx]], axis=1)
    return MessageSet(MODE_SAMPLED, int(m), int(seed), pairs)


@dataclass
class LoadTable:
    load: np.ndarray
    alive: np.ndarray

    def total(self) -> int:
        return int(self.load.sum())


@dataclass
class MetricsReport:
    n_messages: int
    n_delivered: int
    n_dead_end: int
    n_hop_limit: int
    l2: float | None
    l2_penalized: float | None
    u_over_M: float
    f_max: int
    max_hops: int
    d: float | None = None
    connected: bool | None = None
    nav_diameter: int | None = None


def evaluate(net: Network, messages: MessageSet, policy: NavigationPolicy,
             use_engine: bool = True, penalty: int | None = None,
             ) -> tuple[MetricsReport, LoadTable]:
    """Route every message and aggregate; deterministic given inputs."""
    if messages.mode == MODE_SAMPLED:
        if not net.alive[messages.pairs].all():
            raise ValueError("message set references failed nodes")
    elif messages.m != net.n_alive * max(net.n_alive - 1, 0):
        raise ValueError("all-pairs message set does not match the alive mask")
    if penalty is None:
        penalty = policy.hop_limit
    if use_engine:
        if messages.mode == MODE_ALL_PAIRS:
            totals = engine.evaluate_all_pairs(net, policy.level, policy.hop_limit)
        else:
            totals = engine.evaluate_pairs(net, messages.pairs, policy.level,
                                           policy.hop_limit)
        n_del, hop_sum = totals.delivered, totals.hop_sum
        n_dead, n_lim = totals.dead_end, totals.hop_limited
        max_hops = totals.max_hops
        loads = totals.loads
    else:
        loads = np.zeros(net.config.N, dtype=np.int64)
        n_del = hop_sum = n_dead = n_lim = max_hops = 0
        for s, t in _iter_pairs(net, messages):
            out = routing.route_message(net, int(s), int(t), policy)
            for v in out.path[1:-1]:
                loads[v] += 1
            if out.delivered:
                n_del += 1
                hop_sum += out.hops
                max_hops = max(max_hops, out.hops)
            elif out.status == routing.LOST_DEAD_END:
                n_dead += 1
            else:
                n_lim += 1
    M = messages.m
    n_lost = n_dead + n_lim
    report = MetricsReport(
        n_messages=M,
        n_delivered=n_del,
        n_dead_end=n_dead,
        n_hop_limit=n_lim,
        l2=hop_sum / n_del if n_del else None,
        l2_penalized=(hop_sum + n_lost * penalty) / M if M else None,
        u_over_M=n_lost / M if M else 0.0,
        f_max=int(loads.max()) if len(loads) else 0,
        max_hops=max_hops,
    )
    return report, LoadTable(load=loads, alive=net.alive.copy())


def _iter_pairs(net: Network, messages: MessageSet):
    if messages.mode == MODE_SAMPLED:
        yield from ((int(a), int(b)) for a, b in messages.pairs)
    else:
        ids = net.alive_ids()
        for t in ids:
            for s in ids:
                if s != t:
                    yield int(s), int(t)


def penalized_l2(outcomes: list[RoutingOutcome], penalty: int) -> float:
    """Mean path length with lost messages counted at `penalty` hops."""
    if penalty < 1:
        raise ValueError("penalty must be >= 1")
    if not outcomes:
        raise ValueError("no outcomes")
    total = sum(o.hops if o.delivered else penalty for o in outcomes)
    return total / len(outcomes)


def forwarding_index(loads: LoadTable) -> int:
    return int(loads.load.max()) if len(loads.load) else 0


def global_average_distance(net: Network) -> tuple[float | None, bool]:
    """Exact mean shortest-path length over ordered distinct alive pairs (BFS).

    Returns (mean, connected); disconnection is flagged, with the mean taken
    over reachable pairs.
    """
    return engine.average_distance(net)


def load_histogram(loads: LoadTable, bin_width: int = 1):
    """Counts of alive nodes per load bin [k*w, (k+1)*w - 1]; returns
    (bin_lo, bin_hi, counts) covering 0..max(load)."""
    if bin_width < 1:
        raise ValueError("bin_width must be >= 1")
    values = loads.load[loads.alive]
    top = int(values.max()) if len(values) else 0
    n_bins = top // bin_width + 1
    counts = np.bincount(values // bin_width, minlength=n_bins)
    lo = np.arange(n_bins, dtype=np.int64) * bin_width
    hi = lo + bin_width - 1
    return lo, hi, counts


def load_variance(loads: LoadTable) -> float:
    """Population variance of the load over alive nodes."""
    values = loads.load[loads.alive]
    return float(values.var()) if len(values) else 0.0


def _fmt(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def report_csv(report: MetricsReport) -> str:
    """Single-row report (l2 over delivered messages; NA when undefined)."""
    lines = [
        "# swtorus metrics report",
        f"# messages={report.n_messages} delivered={report.n_delivered} "
        f"dead_end={report.n_dead_end} hop_limit={report.n_hop_limit}",
        "l2,u_over_M,f_max,d,nav_diameter",
        ",".join(_fmt(v) for v in (report.l2, report.u_over_M, report.f_max,
                                   report.d, report.nav_diameter)),
    ]
    return "\n".join(lines) + "\n"


def histogram_csv(lo, hi, counts) -> str:
    """Occupied load bins, one row per nonzero bin."""
    lines = ["load_bin_lo,load_bin_hi,count"]
    for a, b, c in zip(lo, hi, counts):
        if c:
            lines.append(f"{a},{b},{c}")
    return "\n".join(lines) + "\n"
