"""Experiment orchestration: best-sample selection, failure sweeps, figures.

Protocol: generate n_samples candidate networks, keep the one with the best
intact metrics (average navigation distance first, forwarding index as the
tie-breaker); for each failed-node count b run n_repetitions independent
failure draws and report mean and root-mean-square deviation per metric; when
an assurance factor k is configured, each draw additionally runs the cascade
with f_th = k * f_max of the intact iBT reference network. All sub-seeds
derive from the master seed, so a config fully determines every output byte.
"""
from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__, engine, metrics, seeds, topology
from .failure import CascadeParams, FailureScenario, inject_failures, run_cascade
from .metrics import (MODE_ALL_PAIRS, MODE_SAMPLED, MetricsReport,
                      build_message_set, evaluate, load_histogram, histogram_csv)
from .routing import NavigationPolicy
from .topology import (KIND_IBT, KIND_STOCHASTIC, KIND_STOCHASTIC_FIXED,
                       KIND_TORUS, IbtParams, LatticeConfig, Network,
                       StochasticParams, build_torus, generate_ibt,
                       generate_stochastic, generate_stochastic_fixed_degree)

CONFIG_VERSION = "swtorus-config-v1"

# Load-distribution snapshots (figure 4) use these canonical failure fractions.
HISTOGRAM_FRACTIONS = (0.0, 0.01, 0.05, 0.3)

_CONFIG_FIELDS = (
    "L", "kind", "alpha", "s1", "s2", "ibt_candidates", "n_samples",
    "n_repetitions", "b_fractions", "b_values", "level", "messages",
    "master_seed", "cascade_k", "selection", "hist_bin_width",
)


@dataclass(frozen=True)
class ExperimentConfig:
    L: int = 64
    kind: str = KIND_STOCHASTIC
    alpha: float = 1.0
    s1: int = 8
    s2: int = 32
    ibt_candidates: tuple = ()
    n_samples: int = 20
    n_repetitions: int = 10
    b_fractions: tuple = (0.0, 0.01, 0.05, 0.1, 0.3)
    b_values: tuple = ()
    level: int = 2
    messages: str = MODE_ALL_PAIRS
    master_seed: int = 12345
    cascade_k: float | None = None
    selection: str = "l2"
    hist_bin_width: int = 1

    def __post_init__(self):
        if self.kind not in topology.KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.level not in (1, 2):
            raise ValueError("level must be 1 or 2")
        if self.selection not in ("l2", "fmax"):
            raise ValueError("selection must be 'l2' or 'fmax'")
        if self.n_samples < 1 or self.n_repetitions < 1:
            raise ValueError("n_samples and n_repetitions must be >= 1")
        for f in self.b_fractions:
            if not 0.0 <= f < 1.0:
                raise ValueError(f"b fraction {f} out of [0, 1)")
        self.message_mode()  # validates the messages string

    def lattice(self) -> LatticeConfig:
        return LatticeConfig(self.L)

    def message_mode(self) -> tuple[str, int | None]:
        if self.messages == MODE_ALL_PAIRS:
            return MODE_ALL_PAIRS, None
        if self.messages.startswith("sample:"):
            m = int(self.messages.split(":", 1)[1])
            if m < 1:
                raise ValueError("sample size must be >= 1")
            return MODE_SAMPLED, m
        raise ValueError(f"bad messages spec {self.messages!r}")

    def resolved_b_values(self) -> tuple[int, ...]:
        if self.b_values:
            vals = tuple(int(b) for b in self.b_values)
        else:
            N = self.L * self.L
            vals = tuple(int(round(f * N)) for f in self.b_fractions)
        for b in vals:
            if not 0 <= b < self.L * self.L:
                raise ValueError(f"b={b} out of range")
        return vals

    def candidates(self) -> tuple[tuple[int, int], ...]:
        return self.ibt_candidates if self.ibt_candidates else ((self.s1, self.s2),)

    def to_text(self) -> str:
        lines = [f"# {CONFIG_VERSION}"]
        for name in _CONFIG_FIELDS:
            lines.append(f"{name} = {_field_to_str(getattr(self, name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        lines = text.splitlines()
        if not lines or lines[0].strip() != f"# {CONFIG_VERSION}":
            raise ValueError(f"config must start with '# {CONFIG_VERSION}'")
        values = {}
        for ln in lines[1:]:
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            if "=" not in ln:
                raise ValueError(f"bad config line: {ln!r}")
            key, raw = (part.strip() for part in ln.split("=", 1))
            if key not in _CONFIG_FIELDS:
                raise ValueError(f"unknown config key {key!r}")
            values[key] = _field_from_str(key, raw)
        return cls(**values)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def sha256(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


def _field_to_str(value) -> str:
    if value is None:
        return ""
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ",".join(f"{a}:{b}" for a, b in value)
        return ",".join(_field_to_str(v) for v in value)
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _field_from_str(key: str, raw: str):
    if raw == "":
        return {"ibt_candidates": (), "b_values": (), "cascade_k": None}[key]
    if key in ("L", "s1", "s2", "n_samples", "n_repetitions", "level",
               "master_seed", "hist_bin_width"):
        return int(raw)
    if key in ("alpha", "cascade_k"):
        return float(raw)
    if key == "b_fractions":
        return tuple(float(v) for v in raw.split(","))
    if key == "b_values":
        return tuple(int(v) for v in raw.split(","))
    if key == "ibt_candidates":
        return tuple(tuple(int(x) for x in item.split(":")) for item in raw.split(","))
    return raw


def build_network(config: ExperimentConfig, sample_index: int = 0,
                  candidate: tuple[int, int] | None = None) -> Network:
    """The sample_index-th candidate network for a config."""
    cfg = config.lattice()
    if config.kind == KIND_TORUS:
        return build_torus(cfg)
    if config.kind == KIND_IBT:
        s1, s2 = candidate if candidate is not None else config.candidates()[0]
        return generate_ibt(cfg, IbtParams(s1, s2))
    seed = seeds.derive_seed(config.master_seed, seeds.GENERATION, sample_index)
    params = StochasticParams(alpha=config.alpha, seed=seed,
                              fixed_degree=config.kind == KIND_STOCHASTIC_FIXED)
    if config.kind == KIND_STOCHASTIC_FIXED:
        return generate_stochastic_fixed_degree(cfg, params)
    return generate_stochastic(cfg, params)


@dataclass
class SelectionResult:
    network: Network
    index: int
    report: MetricsReport
    scores: list[tuple[float, int]]  # (l2, f_max) per candidate


def _intact_report(net: Network, config: ExperimentConfig,
                   message_seed_index: int) -> MetricsReport:
    mode, m = config.message_mode()
    seed = seeds.derive_seed(config.master_seed, seeds.MESSAGES,
                             message_seed_index)
    msgs = build_message_set(net, mode, m=m, seed=seed)
    policy = NavigationPolicy(config.level, hop_limit=net.config.N)
    report, _ = evaluate(net, msgs, policy)
    return report


def select_best_sample(config: ExperimentConfig) -> SelectionResult:
    """Best candidate by intact metrics: minimize l2 then f_max (or swapped
    when selection='fmax'); deterministic iBT ranges over its (s1, s2) list."""
    if config.kind == KIND_TORUS:
        net = build_torus(config.lattice())
        report = _intact_report(net, config, 0)
        return SelectionResult(net, 0, report, [(report.l2, report.f_max)])
    if config.kind == KIND_IBT:
        nets = [build_network(config, 0, candidate=c) for c in config.candidates()]
    else:
        nets = [build_network(config, i) for i in range(config.n_samples)]
    scores = []
    reports = []
    for i, net in enumerate(nets):
        report = _intact_report(net, config, i)
        reports.append(report)
        scores.append((report.l2 if report.l2 is not None else float("inf"),
                       report.f_max))
    if config.selection == "l2":
        keys = [(l2, fmax, i) for i, (l2, fmax) in enumerate(scores)]
    else:
        keys = [(fmax, l2, i) for i, (l2, fmax) in enumerate(scores)]
    best = min(range(len(keys)), key=lambda i: keys[i])
    return SelectionResult(nets[best], best, reports[best], scores)


@dataclass
class SweepRow:
    b: int
    fraction: float
    n_reps: int
    u_mean: float
    u_rms: float
    l2_mean: float | None
    l2_rms: float | None
    f_max_mean: float
    f_max_rms: float
    overload_mean: float | None = None
    overload_rms: float | None = None


@dataclass
class SweepReport:
    rows: list[SweepRow]
    intact: MetricsReport
    nav_diameter: int
    hop_limit: int
    f_max_ref: int | None
    all_terminated: bool
    config: ExperimentConfig


def _mean_rms(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    return mean, float(np.sqrt(np.mean((arr - mean) ** 2)))


def ibt_reference_f_max(config: ExperimentConfig) -> int:
    """Forwarding index of the intact iBT network of the same size and
    message mode; the base for cascade thresholds f_th = k * f_max_ref."""
    ref_cfg = replace(config, kind=KIND_IBT, cascade_k=None)
    net = build_network(ref_cfg, 0)
    mode, m = config.message_mode()
    seed = seeds.derive_seed(config.master_seed, seeds.REFERENCE)
    msgs = build_message_set(net, mode, m=m, seed=seed)
    report, _ = evaluate(net, msgs, NavigationPolicy(config.level, hop_limit=net.config.N))
    return report.f_max


def sweep(config: ExperimentConfig, network: Network | None = None) -> SweepReport:
    """Failure sweep over the configured b values, one network, mean + RMS
    over repetitions. b=0 rows are evaluated once (no randomness)."""
    if network is None:
        network = select_best_sample(config).network
    N = network.config.N
    d2 = engine.navigation_diameter(network, level=2)
    hop_limit = 2 * d2
    policy = NavigationPolicy(config.level, hop_limit)
    mode, m = config.message_mode()

    intact_msgs = build_message_set(
        network, mode, m=m,
        seed=seeds.derive_seed(config.master_seed, seeds.MESSAGES))
    intact_report, _ = evaluate(network, intact_msgs, policy)

    f_ref = None
    if config.cascade_k is not None:
        f_ref = ibt_reference_f_max(config)

    rows = []
    all_terminated = True
    for ib, b in enumerate(config.resolved_b_values()):
        n_reps = 1 if b == 0 else config.n_repetitions
        u_vals, l2_vals, fmax_vals, over_vals = [], [], [], []
        for rep in range(n_reps):
            scen = FailureScenario(
                b, seeds.derive_seed(config.master_seed, seeds.FAILURE, ib, rep))
            msg_seed = seeds.derive_seed(config.master_seed, seeds.MESSAGES, ib, rep)
            if config.cascade_k is not None:
                casc = run_cascade(network, scen,
                                   CascadeParams.from_assurance(config.cascade_k, f_ref),
                                   policy, message_mode=mode, m=m,
                                   message_seed=msg_seed, collect_reports=True)
                report = casc.reports[0]
                over_vals.append(casc.overload_failed / N)
                all_terminated = all_terminated and casc.terminated
            else:
                fnet = inject_failures(network, scen)
                m_eff = None if m is None else min(m, fnet.n_alive * (fnet.n_alive - 1))
                msgs = build_message_set(fnet, mode, m=m_eff, seed=msg_seed)
                report, _ = evaluate(fnet, msgs, policy)
            u_vals.append(report.u_over_M)
            if report.l2 is not None:
                l2_vals.append(report.l2)
            fmax_vals.append(float(report.f_max))
        u_mean, u_rms = _mean_rms(u_vals)
        l2_mean, l2_rms = _mean_rms(l2_vals) if l2_vals else (None, None)
        f_mean, f_rms = _mean_rms(fmax_vals)
        o_mean, o_rms = _mean_rms(over_vals) if over_vals else (None, None)
        rows.append(SweepRow(b=b, fraction=b / N, n_reps=n_reps,
                             u_mean=u_mean, u_rms=u_rms,
                             l2_mean=l2_mean, l2_rms=l2_rms,
                             f_max_mean=f_mean, f_max_rms=f_rms,
                             overload_mean=o_mean, overload_rms=o_rms))
    return SweepReport(rows=rows, intact=intact_report, nav_diameter=d2,
                       hop_limit=hop_limit, f_max_ref=f_ref,
                       all_terminated=all_terminated, config=config)


_SWEEP_METRICS = {
    "u": ("u_mean", "u_rms"),
    "l2": ("l2_mean", "l2_rms"),
    "f_max": ("f_max_mean", "f_max_rms"),
    "overload": ("overload_mean", "overload_rms"),
}


def sweep_csv(report: SweepReport, metrics_subset: tuple[str, ...] | None = None) -> str:
    """Sweep rows as CSV; `metrics_subset` restricts the value columns."""
    names = tuple(metrics_subset) if metrics_subset else tuple(_SWEEP_METRICS)
    if not report.rows or report.rows[0].overload_mean is None:
        names = tuple(n for n in names if n != "overload")
    cols = []
    for n in names:
        cols.extend(_SWEEP_METRICS[n])
    header = [
        "# swtorus sweep",
        f"# kind={report.config.kind} L={report.config.L} level={report.config.level} "
        f"messages={report.config.messages} master_seed={report.config.master_seed}",
        f"# nav_diameter={report.nav_diameter} hop_limit={report.hop_limit}"
        + (f" f_max_ref={report.f_max_ref} k={_fmt(report.config.cascade_k)}"
           if report.f_max_ref is not None else ""),
        "# rms is the population form sqrt(mean((x-mean)^2)) over repetitions",
        "b,b_over_N,n_reps," + ",".join(cols),
    ]
    lines = header
    for row in report.rows:
        vals = [row.b, row.fraction, row.n_reps]
        vals.extend(getattr(row, c) for c in cols)
        lines.append(",".join(_fmt(v) for v in vals))
    return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    return metrics._fmt(x)


def write_manifest(out_dir, config: ExperimentConfig, outputs: list[str]) -> str:
    path = os.path.join(out_dir, "manifest")
    lines = [
        "# swtorus manifest",
        f"package_version = {__version__}",
        f"config_sha256 = {config.sha256()}",
        f"master_seed = {config.master_seed}",
        "seed_purposes = generation:1 matching:2 failure:3 messages:4 reference:5",
        "outputs = " + ",".join(sorted(os.path.relpath(p, out_dir) for p in outputs)),
        "# config follows",
    ]
    text = "\n".join(lines) + "\n" + config.to_text()
    with open(path, "w") as fh:
        fh.write(text)
    return path


_FIGURE_KINDS = {
    1: (KIND_STOCHASTIC, KIND_IBT),
    2: (KIND_STOCHASTIC, KIND_IBT),
    3: (KIND_STOCHASTIC, KIND_IBT),
    4: (KIND_STOCHASTIC, KIND_IBT, KIND_TORUS),
    5: (KIND_STOCHASTIC, KIND_STOCHASTIC_FIXED, KIND_IBT),
}
_FIGURE_METRIC = {1: "u", 2: "l2", 3: "f_max", 5: "overload"}


def reproduce_figure(config: ExperimentConfig, figure_id: int, out_dir) -> list[str]:
    """Emit the CSV series behind one figure into out_dir/fig<id>/.

    1: u/M vs b/N; 2: l2 vs b/N; 3: f_max vs b/N (stochastic + iBT);
    4: load histograms at b/N in {0, 0.01, 0.05, 0.3} (plus torus baseline);
    5: overload fraction vs b/N (k defaults to 3; includes fixed-degree).
    """
    if figure_id not in _FIGURE_KINDS:
        raise ValueError(f"figure must be 1..5, got {figure_id}")
    fig_dir = os.path.join(out_dir, f"fig{figure_id}")
    os.makedirs(fig_dir, exist_ok=True)
    written = []
    for kind in _FIGURE_KINDS[figure_id]:
        if figure_id == 5:
            k = config.cascade_k if config.cascade_k is not None else 3.0
        else:
            k = None
        kcfg = replace(config, kind=kind, cascade_k=k)
        sel = select_best_sample(kcfg)
        if figure_id == 4:
            written.extend(_figure4_histograms(kcfg, sel.network, fig_dir))
        else:
            swp = sweep(kcfg, sel.network)
            path = os.path.join(fig_dir, f"{kind}.csv")
            with open(path, "w") as fh:
                fh.write(sweep_csv(swp, (_FIGURE_METRIC[figure_id],)))
            written.append(path)
    written.append(write_manifest(out_dir, config, written))
    return written


def _figure4_histograms(config: ExperimentConfig, network: Network,
                        fig_dir: str) -> list[str]:
    N = network.config.N
    d2 = engine.navigation_diameter(network, level=2)
    policy = NavigationPolicy(config.level, 2 * d2)
    mode, m = config.message_mode()
    written = []
    for ib, frac in enumerate(HISTOGRAM_FRACTIONS):
        b = int(round(frac * N))
        if b == 0:
            fnet = network
        else:
            scen = FailureScenario(
                b, seeds.derive_seed(config.master_seed, seeds.FAILURE, ib, 0))
            fnet = inject_failures(network, scen)
        m_eff = None if m is None else min(m, fnet.n_alive * (fnet.n_alive - 1))
        msgs = build_message_set(
            fnet, mode, m=m_eff,
            seed=seeds.derive_seed(config.master_seed, seeds.MESSAGES, ib, 0))
        _, loads = evaluate(fnet, msgs, policy)
        lo, hi, counts = load_histogram(loads, config.hist_bin_width)
        path = os.path.join(fig_dir, f"{config.kind}_b{b}.csv")
        with open(path, "w") as fh:
            fh.write(f"# swtorus load histogram kind={config.kind} "
                     f"b={b} b_over_N={_fmt(frac)} bin_width={config.hist_bin_width}\n")
            fh.write(histogram_csv(lo, hi, counts))
        written.append(path)
    return written
