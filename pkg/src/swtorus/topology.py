"""Torus lattices with small-world shortcuts.

A network is an L x L lattice with 2D-torus topology (node (i, j) has index
i*L + j), optionally augmented with undirected shortcut links produced by one
of three generators:

- stochastic: every node draws one shortcut partner with probability
  proportional to r^(-alpha) in the lattice distance r (exactly N shortcuts,
  mean total degree 6);
- stochastic fixed-degree: stub matching with the same distance weighting,
  every node ends with exactly 2 shortcut endpoints (total degree 6);
- iBT (interlaced bypass torus): a deterministic parity-interlaced pattern of
  row/column bypasses with two alternating lengths (s1, s2), total degree 6.

Failed nodes keep their links in the structure but are never traversed by the
routing layer.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import seeds

KIND_TORUS = "torus"
KIND_STOCHASTIC = "stochastic"
KIND_STOCHASTIC_FIXED = "stochastic-fixed-degree"
KIND_IBT = "ibt"
KINDS = (KIND_TORUS, KIND_STOCHASTIC, KIND_STOCHASTIC_FIXED, KIND_IBT)


@dataclass(frozen=True)
class LatticeConfig:
    """Side length L of the L x L torus; N = L*L nodes."""

    L: int

    def __post_init__(self):
        if self.L < 4:
            raise ValueError(f"L must be >= 4, got {self.L}")

    @property
    def N(self) -> int:
        return self.L * self.L


@dataclass(frozen=True)
class StochasticParams:
    alpha: float = 1.0
    seed: int = 0
    fixed_degree: bool = False
    max_restarts: int = 100

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.max_restarts < 1:
            raise ValueError("max_restarts must be >= 1")


@dataclass(frozen=True)
class IbtParams:
    s1: int
    s2: int

    def __post_init__(self):
        for s in (self.s1, self.s2):
            if s < 2 or s % 2 != 0:
                raise ValueError(f"bypass lengths must be even and >= 2, got {s}")
        if self.s1 == self.s2:
            raise ValueError("s1 and s2 must differ")


def node_index(i: int, j: int, L: int) -> int:
    return (i % L) * L + (j % L)


def node_coords(v: int, L: int) -> tuple[int, int]:
    return v // L, v % L


def torus_distance(a: int, b: int, cfg: LatticeConfig) -> int:
    """Lattice (Manhattan-on-torus) distance between node ids a and b."""
    L = cfg.L
    ai, aj = divmod(a, L)
    bi, bj = divmod(b, L)
    di = abs(ai - bi)
    dj = abs(aj - bj)
    return min(di, L - di) + min(dj, L - dj)


@dataclass(eq=False)
class Network:
    """Immutable torus-plus-shortcuts graph with a per-node alive mask.

    shortcuts: (S, 2) int64 array, each row canonical (a < b), rows sorted
    lexicographically. adjacency is CSR: node v's neighbors are
    adj[indptr[v]:indptr[v+1]] (4 lattice links first, then shortcut partners).
    """

    config: LatticeConfig
    kind: str
    shortcuts: np.ndarray
    alive: np.ndarray
    indptr: np.ndarray = field(repr=False)
    adj: np.ndarray = field(repr=False)

    @property
    def n_alive(self) -> int:
        return int(self.alive.sum())

    def failed_ids(self) -> np.ndarray:
        return np.nonzero(~self.alive)[0]

    def alive_ids(self) -> np.ndarray:
        return np.nonzero(self.alive)[0]

    def degrees(self) -> np.ndarray:
        """Structural degree per node (failures do not remove links)."""
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.adj[self.indptr[v]:self.indptr[v + 1]]

    def with_failed(self, ids) -> "Network":
        """A copy with the given node ids additionally marked failed."""
        alive = self.alive.copy()
        alive[np.asarray(ids, dtype=np.int64)] = False
        return replace(self, alive=alive)


def _validate_shortcuts(cfg: LatticeConfig, shortcuts: np.ndarray) -> np.ndarray:
    shortcuts = np.asarray(shortcuts, dtype=np.int64).reshape(-1, 2)
    if shortcuts.size == 0:
        return shortcuts.reshape(0, 2)
    a, b = shortcuts[:, 0], shortcuts[:, 1]
    if (a >= b).any():
        raise ValueError("shortcuts must be canonical (a < b)")
    if a.min() < 0 or b.max() >= cfg.N:
        raise ValueError("shortcut endpoint out of range")
    # Self-loops are excluded by a < b; lattice neighbors have distance 1.
    L = cfg.L
    di = np.abs(a // L - b // L)
    dj = np.abs(a % L - b % L)
    r = np.minimum(di, L - di) + np.minimum(dj, L - dj)
    if (r < 2).any():
        raise ValueError("shortcut duplicates a lattice link")
    order = np.lexsort((b, a))
    shortcuts = shortcuts[order]
    if len(shortcuts) > 1 and (np.diff(shortcuts[:, 0] * cfg.N + shortcuts[:, 1]) == 0).any():
        raise ValueError("duplicate shortcut")
    return shortcuts


def make_network(cfg: LatticeConfig, kind: str, shortcuts, alive=None) -> Network:
    """Assemble a Network, validating shortcuts and building CSR adjacency."""
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    shortcuts = _validate_shortcuts(cfg, shortcuts)
    L, N = cfg.L, cfg.N
    idx = np.arange(N, dtype=np.int64)
    i, j = idx // L, idx % L
    lattice = np.empty((N, 4), dtype=np.int64)
    lattice[:, 0] = ((i + 1) % L) * L + j
    lattice[:, 1] = ((i - 1) % L) * L + j
    lattice[:, 2] = i * L + (j + 1) % L
    lattice[:, 3] = i * L + (j - 1) % L

    deg = np.full(N, 4, dtype=np.int64)
    if len(shortcuts):
        np.add.at(deg, shortcuts.ravel(), 1)
    indptr = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    adj = np.empty(indptr[-1], dtype=np.int64)
    base = indptr[:-1]
    for k in range(4):
        adj[base + k] = lattice[:, k]
    pos = (base + 4).copy()
    for a, b in shortcuts:
        adj[pos[a]] = b
        pos[a] += 1
        adj[pos[b]] = a
        pos[b] += 1

    if alive is None:
        alive = np.ones(N, dtype=bool)
    else:
        alive = np.asarray(alive, dtype=bool).copy()
        if alive.shape != (N,):
            raise ValueError("alive mask has wrong shape")
    return Network(config=cfg, kind=kind, shortcuts=shortcuts, alive=alive,
                   indptr=indptr, adj=adj)


def build_torus(cfg: LatticeConfig) -> Network:
    """Bare L x L torus: no shortcuts, all nodes alive, every degree 4."""
    return make_network(cfg, KIND_TORUS, np.empty((0, 2), dtype=np.int64))


def _displacement_weights(L: int, alpha: float) -> np.ndarray:
    """r^(-alpha) over the L x L displacement grid, flattened (code di*L + dj).

    Cells at r < 2 (the node itself and its four lattice neighbors) get weight
    zero; they are never admissible shortcut partners from any node, so this
    single translation-invariant field serves every first endpoint.
    """
    d = np.arange(L)
    rd = np.minimum(d, L - d)
    r = rd[:, None] + rd[None, :]
    w = np.zeros((L, L), dtype=np.float64)
    mask = r >= 2
    w[mask] = r[mask].astype(np.float64) ** (-float(alpha))
    return w.ravel()


def generate_stochastic(cfg: LatticeConfig, params: StochasticParams) -> Network:
    """Sequential per-node shortcut draw with P(partner at distance r) ~ r^(-alpha).

    Visits nodes in index order; each draws one partner by inverse-CDF sampling
    over the displacement weight field. A draw that would duplicate an existing
    shortcut is rejected and redrawn, which realizes the distribution
    renormalized over the remaining admissible nodes. Exactly N shortcuts.
    """
    if params.fixed_degree:
        return generate_stochastic_fixed_degree(cfg, params)
    L, N = cfg.L, cfg.N
    rng = seeds.rng_from(params.seed, seeds.GENERATION)
    w = _displacement_weights(L, params.alpha)
    cum = np.cumsum(w)
    total = cum[-1]
    out = np.empty((N, 2), dtype=np.int64)
    present: set[tuple[int, int]] = set()
    for u in range(N):
        ui, uj = divmod(u, L)
        while True:
            x = rng.random() * total
            code = int(np.searchsorted(cum, x, side="right"))
            if code >= N:  # float boundary artifact; redraw
                continue
            di, dj = divmod(code, L)
            v = ((ui + di) % L) * L + ((uj + dj) % L)
            pair = (u, v) if u < v else (v, u)
            if pair in present:
                continue
            present.add(pair)
            out[u] = pair
            break
    return make_network(cfg, KIND_STOCHASTIC, out)


def _try_stub_matching(cfg: LatticeConfig, alpha: float,
                       rng: np.random.Generator) -> np.ndarray | None:
    """One stub-matching attempt; None on deadlock."""
    L, N = cfg.L, cfg.N
    d = np.arange(L)
    rd = np.minimum(d, L - d)
    stubs = np.full(N, 2, dtype=np.int64)
    partners: list[list[int]] = [[] for _ in range(N)]
    pairs = []
    u = 0
    while True:
        while u < N and stubs[u] == 0:
            u += 1
        if u >= N:
            break
        ui, uj = divmod(u, L)
        cand = np.nonzero(stubs > 0)[0]
        r = rd[(cand // L - ui) % L] + rd[(cand % L - uj) % L]
        wts = np.zeros(len(cand), dtype=np.float64)
        admissible = r >= 2
        wts[admissible] = r[admissible].astype(np.float64) ** (-float(alpha))
        for p in partners[u]:
            wts[cand == p] = 0.0
        total = wts.sum()
        if total <= 0.0:
            return None
        cum = np.cumsum(wts)
        while True:
            k = int(np.searchsorted(cum, rng.random() * total, side="right"))
            if k < len(cand) and wts[k] > 0.0:
                break
        v = int(cand[k])
        pairs.append((u, v) if u < v else (v, u))
        partners[u].append(v)
        partners[v].append(u)
        stubs[u] -= 1
        stubs[v] -= 1
    return np.array(pairs, dtype=np.int64)


def generate_stochastic_fixed_degree(cfg: LatticeConfig,
                                     params: StochasticParams) -> Network:
    """Stub matching: 2 stubs per node, lowest-index-first, weights r^(-alpha).

    Every node ends as an endpoint of exactly 2 shortcuts (total degree 6).
    A deadlocked matching (no admissible partner with stubs left) restarts the
    whole process on the next RNG substream, up to params.max_restarts.
    """
    if cfg.N % 2 != 0:
        raise ValueError("fixed-degree matching requires an even node count")
    for attempt in range(params.max_restarts):
        rng = seeds.rng_from(params.seed, seeds.MATCHING, attempt)
        pairs = _try_stub_matching(cfg, params.alpha, rng)
        if pairs is not None:
            return make_network(cfg, KIND_STOCHASTIC_FIXED, pairs)
    raise RuntimeError(
        f"stub matching deadlocked {params.max_restarts} times "
        f"(L={cfg.L}, alpha={params.alpha}); parameters look pathological")


def _ibt_bypass_length(c: int, params: IbtParams) -> int:
    """Bypass length carried at orthogonal coordinate c: alternates in blocks of 2."""
    return params.s1 if (c // 2) % 2 == 0 else params.s2


def generate_ibt(cfg: LatticeConfig, params: IbtParams) -> Network:
    """Deterministic interlaced bypass construction.

    Nodes with even (i+j) carry row bypasses to (i +/- s(j), j); odd-parity
    nodes carry column bypasses to (i, j +/- s(i)); s(c) alternates between s1
    and s2 in blocks of two rows/columns. When a bypass length equals L/2 the
    two directions coincide, so affected nodes instead carry one half-ring
    chord in their own direction plus the orthogonal half-ring chord, which
    keeps every node at exactly 2 shortcut endpoints (total degree 6). That
    compensation is consistent only when L is a multiple of 8.
    """
    L, N = cfg.L, cfg.N
    for s in (params.s1, params.s2):
        if L % s != 0:
            raise ValueError(f"L={L} is not divisible by bypass length {s}")
        if s > L // 2:
            raise ValueError(f"bypass length {s} exceeds L/2={L // 2}")
        if s == L // 2 and L % 8 != 0:
            raise ValueError(f"bypass length L/2 requires L divisible by 8, got L={L}")
    half = L // 2
    present: set[tuple[int, int]] = set()
    for u in range(N):
        i, j = divmod(u, L)
        if (i + j) % 2 == 0:
            s = _ibt_bypass_length(j, params)
            if s == half:
                ends = (node_index(i + half, j, L), node_index(i, j + half, L))
            else:
                ends = (node_index(i + s, j, L), node_index(i - s, j, L))
        else:
            s = _ibt_bypass_length(i, params)
            if s == half:
                ends = (node_index(i, j + half, L), node_index(i + half, j, L))
            else:
                ends = (node_index(i, j + s, L), node_index(i, j - s, L))
        for v in ends:
            present.add((u, v) if u < v else (v, u))
    shortcuts = np.array(sorted(present), dtype=np.int64)
    endpoints = np.bincount(shortcuts.ravel(), minlength=N)
    if not (endpoints == 2).all():
        raise AssertionError("iBT construction must give every node 2 shortcut endpoints")
    return make_network(cfg, KIND_IBT, shortcuts)


def shortcut_lengths(net: Network) -> np.ndarray:
    """Lattice distance spanned by each shortcut."""
    if len(net.shortcuts) == 0:
        return np.zeros(0, dtype=np.int64)
    L = net.config.L
    a, b = net.shortcuts[:, 0], net.shortcuts[:, 1]
    di = np.abs(a // L - b // L)
    dj = np.abs(a % L - b % L)
    return np.minimum(di, L - di) + np.minimum(dj, L - dj)


def unit_wiring_cost(net: Network) -> float:
    """Total shortcut lattice length divided by N."""
    return float(shortcut_lengths(net).sum()) / net.config.N


def network_to_text(net: Network) -> str:
    """Plain-text serialization; canonical, bit-exact round-trip."""
    lines = [f"L={net.config.L} kind={net.kind}"]
    lines.extend(f"{a} {b}" for a, b in net.shortcuts)
    failed = net.failed_ids()
    if failed.size:
        lines.append("FAILED")
        lines.extend(str(v) for v in failed)
    return "\n".join(lines) + "\n"


def network_from_text(text: str) -> Network:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("L="):
        raise ValueError("bad network header")
    head = dict(part.split("=", 1) for part in lines[0].split())
    cfg = LatticeConfig(int(head["L"]))
    kind = head["kind"]
    shortcuts = []
    failed = []
    in_failed = False
    for ln in lines[1:]:
        if ln.strip() == "FAILED":
            in_failed = True
            continue
        if in_failed:
            failed.append(int(ln))
        else:
            a, b = ln.split()
            shortcuts.append((int(a), int(b)))
    alive = np.ones(cfg.N, dtype=bool)
    if failed:
        alive[np.array(failed, dtype=np.int64)] = False
    arr = np.array(shortcuts, dtype=np.int64).reshape(-1, 2)
    return make_network(cfg, kind, arr, alive=alive)


def save_network(net: Network, path) -> None:
    with open(path, "w") as fh:
        fh.write(network_to_text(net))


def load_network(path) -> Network:
    with open(path) as fh:
        return network_from_text(fh.read())
