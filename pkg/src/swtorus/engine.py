"""Numba kernels for bulk routing evaluation, diameter, and BFS distances.

Implements the same navigation semantics as routing.py (which the tests check
it against), organized for throughput: routes are grouped by target so the
per-target lattice-distance table and the two-level lookahead tables
(m1 = best alive-neighbor distance, u1 = which neighbor attains it,
m2 = best excluding u1) are built once and reused for every source.

Determinism contract: targets are partitioned into N_GROUPS fixed groups; each
group owns integer accumulators and its own int64 load row, and the groups are
reduced in a fixed order afterwards. All accumulation is integral, so results
are bit-identical for any worker count (numba set_num_threads).
"""
from __future__ import annotations

from typing import NamedTuple

import os

# The workqueue layer schedules chunks deterministically and has no external
# library version constraints; results are thread-count independent anyway
# (see the determinism contract below), this just keeps startup quiet and
# portable. Must be set before numba spins up its threading backend.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numpy as np
import numba
from numba import njit, prange

from .topology import Network

N_GROUPS = 256

_BIG = np.int64(1) << np.int64(60)

STATUS_DELIVERED = 0
STATUS_DEAD_END = 1
STATUS_HOP_LIMIT = 2


@njit(cache=True)
def _fill_target_tables(t, L, N, rd, indptr, adj, alive, level,
                        dist, m1, u1, m2):
    ti = t // L
    tj = t % L
    for w in range(N):
        di = w // L - ti
        if di < 0:
            di += L
        dj = w % L - tj
        if dj < 0:
            dj += L
        dist[w] = rd[di] + rd[dj]
    if level == 2:
        for w in range(N):
            if not alive[w]:
                continue
            best = _BIG
            bestu = np.int64(-1)
            second = _BIG
            for e in range(indptr[w], indptr[w + 1]):
                u = adj[e]
                if not alive[u]:
                    continue
                du = dist[u]
                if du < best:
                    second = best
                    best = du
                    bestu = u
                elif du < second:
                    second = du
            m1[w] = best
            u1[w] = bestu
            m2[w] = second


@njit(cache=True)
def _route_one(s, t, L, indptr, adj, alive, level, hop_limit,
               dist, m1, u1, m2, loads):
    """Route s -> t, adding each interior node it leaves to `loads`.

    Returns (status, hops). Interior accounting: a node's load grows when the
    message leaves it, except the first departure (from the source position;
    a path that loops back over the source node counts it like any interior
    node); the terminal node of a lost message is never left and so never
    counted. Both delivered and lost messages thus contribute exactly
    max(hops - 1, 0).
    """
    cur = s
    prev = np.int64(-1)
    hops = 0
    while True:
        if hops == hop_limit:
            return STATUS_HOP_LIMIT, hops
        ci = cur // L
        cj = cur % L
        nxt = np.int64(-1)
        best_score = _BIG
        best_code = _BIG
        hit = False
        for e in range(indptr[cur], indptr[cur + 1]):
            w = adj[e]
            if w == prev or not alive[w]:
                continue
            if w == t:
                hit = True
                break
            score = dist[w]
            if level == 2:
                look = m2[w] if u1[w] == cur else m1[w]
                if look < score:
                    score = look
            di = w // L - ci
            if di < 0:
                di += L
            dj = w % L - cj
            if dj < 0:
                dj += L
            code = di * L + dj
            if score < best_score or (score == best_score and code < best_code):
                nxt = w
                best_score = score
                best_code = code
        if hit:
            nxt = t
        elif nxt < 0:
            return STATUS_DEAD_END, hops
        hops += 1
        if hops > 1:
            loads[cur] += 1
        if nxt == t:
            return STATUS_DELIVERED, hops
        prev = cur
        cur = nxt


@njit(cache=True, parallel=True)
def _eval_all_pairs(L, indptr, adj, alive, level, hop_limit, n_groups):
    N = L * L
    rd = np.empty(L, np.int64)
    for x in range(L):
        rd[x] = x if x <= L - x else L - x
    delivered = np.zeros(n_groups, np.int64)
    hop_sum = np.zeros(n_groups, np.int64)
    dead = np.zeros(n_groups, np.int64)
    limited = np.zeros(n_groups, np.int64)
    max_hops = np.zeros(n_groups, np.int64)
    loads = np.zeros((n_groups, N), np.int64)
    for g in prange(n_groups):
        dist = np.empty(N, np.int64)
        m1 = np.empty(N, np.int64)
        u1 = np.empty(N, np.int64)
        m2 = np.empty(N, np.int64)
        lrow = loads[g]
        for t in range(g, N, n_groups):
            if not alive[t]:
                continue
            _fill_target_tables(t, L, N, rd, indptr, adj, alive, level,
                                dist, m1, u1, m2)
            for s in range(N):
                if s == t or not alive[s]:
                    continue
                status, hops = _route_one(s, t, L, indptr, adj, alive, level,
                                          hop_limit, dist, m1, u1, m2, lrow)
                if status == STATUS_DELIVERED:
                    delivered[g] += 1
                    hop_sum[g] += hops
                    if hops > max_hops[g]:
                        max_hops[g] = hops
                elif status == STATUS_DEAD_END:
                    dead[g] += 1
                else:
                    limited[g] += 1
    return delivered, hop_sum, dead, limited, max_hops, loads


@njit(cache=True, parallel=True)
def _eval_pairs(L, indptr, adj, alive, level, hop_limit, n_groups,
                targets, seg, sources):
    N = L * L
    rd = np.empty(L, np.int64)
    for x in range(L):
        rd[x] = x if x <= L - x else L - x
    delivered = np.zeros(n_groups, np.int64)
    hop_sum = np.zeros(n_groups, np.int64)
    dead = np.zeros(n_groups, np.int64)
    limited = np.zeros(n_groups, np.int64)
    max_hops = np.zeros(n_groups, np.int64)
    loads = np.zeros((n_groups, N), np.int64)
    T = len(targets)
    for g in prange(n_groups):
        dist = np.empty(N, np.int64)
        m1 = np.empty(N, np.int64)
        u1 = np.empty(N, np.int64)
        m2 = np.empty(N, np.int64)
        lrow = loads[g]
        for k in range(g, T, n_groups):
            t = targets[k]
            _fill_target_tables(t, L, N, rd, indptr, adj, alive, level,
                                dist, m1, u1, m2)
            for z in range(seg[k], seg[k + 1]):
                s = sources[z]
                status, hops = _route_one(s, t, L, indptr, adj, alive, level,
                                          hop_limit, dist, m1, u1, m2, lrow)
                if status == STATUS_DELIVERED:
                    delivered[g] += 1
                    hop_sum[g] += hops
                    if hops > max_hops[g]:
                        max_hops[g] = hops
                elif status == STATUS_DEAD_END:
                    dead[g] += 1
                else:
                    limited[g] += 1
    return delivered, hop_sum, dead, limited, max_hops, loads


@njit(cache=True, parallel=True)
def _bfs_totals(N, indptr, adj, alive, n_groups):
    dist_sum = np.zeros(n_groups, np.int64)
    pair_cnt = np.zeros(n_groups, np.int64)
    unreached = np.zeros(n_groups, np.int64)
    for g in prange(n_groups):
        distv = np.empty(N, np.int64)
        queue = np.empty(N, np.int64)
        for s in range(g, N, n_groups):
            if not alive[s]:
                continue
            for v in range(N):
                distv[v] = -1
            head = 0
            tail = 0
            distv[s] = 0
            queue[tail] = s
            tail += 1
            while head < tail:
                v = queue[head]
                head += 1
                dv = distv[v]
                for e in range(indptr[v], indptr[v + 1]):
                    u = adj[e]
                    if alive[u] and distv[u] < 0:
                        distv[u] = dv + 1
                        queue[tail] = u
                        tail += 1
            for v in range(N):
                if v != s and alive[v]:
                    if distv[v] >= 0:
                        dist_sum[g] += distv[v]
                        pair_cnt[g] += 1
                    else:
                        unreached[g] += 1
    return dist_sum, pair_cnt, unreached


class EvalTotals(NamedTuple):
    n_messages: int
    delivered: int
    hop_sum: int
    dead_end: int
    hop_limited: int
    max_hops: int
    loads: np.ndarray


def use_threads(n=None) -> int:
    """Set (clamped to the launch maximum) or query the numba worker count."""
    if n is not None:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
    return numba.get_num_threads()


def evaluate_all_pairs(net: Network, level: int, hop_limit: int) -> EvalTotals:
    """Route every ordered pair of distinct alive nodes."""
    A = net.n_alive
    parts = _eval_all_pairs(net.config.L, net.indptr, net.adj, net.alive,
                            level, hop_limit, N_GROUPS)
    return _reduce(A * (A - 1) if A else 0, parts)


def evaluate_pairs(net: Network, pairs: np.ndarray, level: int,
                   hop_limit: int) -> EvalTotals:
    """Route an explicit (M, 2) array of (source, target) pairs."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(pairs) == 0:
        return EvalTotals(0, 0, 0, 0, 0, 0,
                          np.zeros(net.config.N, dtype=np.int64))
    order = np.lexsort((pairs[:, 0], pairs[:, 1]))
    src = np.ascontiguousarray(pairs[order, 0])
    tgt_sorted = pairs[order, 1]
    targets, first = np.unique(tgt_sorted, return_index=True)
    seg = np.append(first, len(tgt_sorted)).astype(np.int64)
    parts = _eval_pairs(net.config.L, net.indptr, net.adj, net.alive,
                        level, hop_limit, N_GROUPS,
                        targets.astype(np.int64), seg, src)
    return _reduce(len(pairs), parts)


def _reduce(n_messages: int, parts) -> EvalTotals:
    delivered, hop_sum, dead, limited, max_hops, loads = parts
    return EvalTotals(
        n_messages=int(n_messages),
        delivered=int(delivered.sum()),
        hop_sum=int(hop_sum.sum()),
        dead_end=int(dead.sum()),
        hop_limited=int(limited.sum()),
        max_hops=int(max_hops.max()) if len(max_hops) else 0,
        loads=loads.sum(axis=0),
    )


def navigation_diameter(net: Network, level: int = 2) -> int:
    """Maximum delivered path length over all ordered pairs, intact network."""
    if not net.alive.all():
        raise ValueError("navigation diameter is defined on the intact network")
    totals = evaluate_all_pairs(net, level, hop_limit=net.config.N)
    lost = totals.dead_end + totals.hop_limited
    if lost:
        raise RuntimeError(f"{lost} pairs undelivered on intact network")
    return totals.max_hops


def average_distance(net: Network) -> tuple[float | None, bool]:
    """Exact mean BFS distance over ordered distinct alive pairs.

    Returns (mean, connected); mean is over reachable pairs, None if there are
    none; connected is False when some alive pair is unreachable.
    """
    dist_sum, pair_cnt, unreached = _bfs_totals(
        net.config.N, net.indptr, net.adj, net.alive, N_GROUPS)
    total_pairs = int(pair_cnt.sum())
    connected = int(unreached.sum()) == 0
    if total_pairs == 0:
        return None, connected
    return int(dist_sum.sum()) / total_pairs, connected
