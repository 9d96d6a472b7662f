"""Random node failures and the cascading-failure fixed point.

The cascade round loop: evaluate loads over the currently alive nodes, remove
every node whose load strictly exceeds the threshold f_th (simultaneously),
repeat until a round removes nothing. The threshold is usually derived as
f_th = k * f_max_ref where f_max_ref is the forwarding index of the intact
deterministic (iBT) network of the same size under the same message mode. The
hop limit stays the intact-network value for every round.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import metrics, seeds
from .metrics import MessageSet, MetricsReport, build_message_set
from .routing import NavigationPolicy
from .topology import Network


@dataclass(frozen=True)
class FailureScenario:
    b: int
    seed: int

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("b must be >= 0")


def inject_failures(net: Network, scenario: FailureScenario) -> Network:
    """Copy of `net` with exactly b uniformly chosen nodes marked failed."""
    N = net.config.N
    if scenario.b >= N:
        raise ValueError(f"b={scenario.b} must be < N={N}")
    if not net.alive.all():
        raise ValueError("inject_failures expects an intact network")
    rng = seeds.rng_from(scenario.seed, seeds.FAILURE)
    failed = rng.permutation(N)[:scenario.b]
    return net.with_failed(failed)


@dataclass(frozen=True)
class CascadeParams:
    f_th: int
    k: float | None = None
    f_max_ref: int | None = None
    max_rounds: int | None = None

    def __post_init__(self):
        if self.f_th < 1:
            raise ValueError("f_th must be >= 1")

    @classmethod
    def from_assurance(cls, k: float, f_max_ref: int,
                       max_rounds: int | None = None) -> "CascadeParams":
        """Threshold as an assurance factor k times the reference f_max."""
        return cls(f_th=int(round(k * f_max_ref)), k=k, f_max_ref=f_max_ref,
                   max_rounds=max_rounds)


@dataclass
class CascadeReport:
    initially_failed: int
    rounds: list[int]
    f_max_rounds: list[int]
    overload_failed: int
    final_alive: int
    terminated: bool
    reports: list[MetricsReport] = field(default_factory=list)

    def overload_fraction(self, N: int) -> float:
        """Overload-failed share of the network, excluding the b initial failures."""
        return self.overload_failed / N


def run_cascade(net: Network, scenario: FailureScenario, params: CascadeParams,
                policy: NavigationPolicy, message_mode: str = metrics.MODE_ALL_PAIRS,
                m: int | None = None, message_seed: int | None = None,
                collect_reports: bool = False) -> CascadeReport:
    """Inject the initial failures, then iterate overload removal rounds.

    The message set is rebuilt from the alive nodes every round (sampled mode
    derives a per-round seed). Exhausting max_rounds with removals still
    happening is flagged via terminated=False.
    """
    N = net.config.N
    max_rounds = params.max_rounds if params.max_rounds is not None else N
    work = inject_failures(net, scenario)
    rounds: list[int] = []
    f_max_rounds: list[int] = []
    reports: list[MetricsReport] = []
    terminated = False
    for rnd in range(max_rounds):
        if message_mode == metrics.MODE_SAMPLED:
            seed = seeds.derive_seed(
                message_seed if message_seed is not None else scenario.seed,
                seeds.MESSAGES, rnd)
            m_eff = min(m, work.n_alive * max(work.n_alive - 1, 0))
            msgs = build_message_set(work, message_mode, m=m_eff, seed=seed)
        else:
            msgs = build_message_set(work, message_mode)
        report, loads = metrics.evaluate(work, msgs, policy)
        if collect_reports:
            reports.append(report)
        f_max_rounds.append(report.f_max)
        overloaded = np.nonzero(work.alive & (loads.load > params.f_th))[0]
        rounds.append(len(overloaded))
        if len(overloaded) == 0:
            terminated = True
            break
        work = work.with_failed(overloaded)
    return CascadeReport(
        initially_failed=scenario.b,
        rounds=rounds,
        f_max_rounds=f_max_rounds,
        overload_failed=int(sum(rounds)),
        final_alive=work.n_alive,
        terminated=terminated,
        reports=reports,
    )


def cascade_trace_csv(report: CascadeReport, N: int) -> str:
    """Per-round trace: round,removed, alive after the round, f_max observed."""
    lines = [
        "# swtorus cascade trace",
        f"# initially_failed={report.initially_failed} "
        f"overload_failed={report.overload_failed} terminated={str(report.terminated).lower()}",
        "round,removed,alive,f_max_this_round",
    ]
    alive = N - report.initially_failed
    for rnd, (removed, fmax) in enumerate(zip(report.rounds, report.f_max_rounds)):
        alive -= removed
        lines.append(f"{rnd},{removed},{alive},{fmax}")
    return "\n".join(lines) + "\n"
