import numpy as np
import pytest

from swtorus.failure import (
    CascadeParams,
    CascadeReport,
    FailureScenario,
    cascade_trace_csv,
    inject_failures,
    run_cascade,
)
from swtorus.metrics import MODE_SAMPLED
from swtorus.routing import NavigationPolicy
from swtorus.topology import (
    LatticeConfig,
    StochasticParams,
    build_torus,
    generate_stochastic,
)


# ------------------------------------------------------------ injection


def test_inject_exact_count_and_determinism():
    net = build_torus(LatticeConfig(8))
    scen = FailureScenario(b=10, seed=5)
    a = inject_failures(net, scen)
    b = inject_failures(net, scen)
    assert a.n_alive == 54
    assert np.array_equal(a.alive, b.alive)
    c = inject_failures(net, FailureScenario(b=10, seed=6))
    assert not np.array_equal(a.alive, c.alive)


def test_inject_trivial_counts():
    net = build_torus(LatticeConfig(8))
    assert inject_failures(net, FailureScenario(0, 1)).n_alive == 64
    assert inject_failures(net, FailureScenario(63, 1)).n_alive == 1
    with pytest.raises(ValueError):
        inject_failures(net, FailureScenario(64, 1))
    with pytest.raises(ValueError):
        FailureScenario(-1, 1)


def test_inject_requires_intact():
    net = build_torus(LatticeConfig(8)).with_failed([0])
    with pytest.raises(ValueError):
        inject_failures(net, FailureScenario(1, 1))


# ------------------------------------------------------------ parameters


def test_cascade_params_from_assurance():
    p = CascadeParams.from_assurance(3.0, 5)
    assert p.f_th == 15 and p.k == 3.0 and p.f_max_ref == 5
    assert CascadeParams.from_assurance(2.0, 101).f_th == 202
    with pytest.raises(ValueError):
        CascadeParams(f_th=0)


# ------------------------------------------------------------ cascade loop


def test_cascade_full_collapse_at_threshold_one():
    # torus L=8 carries 193 through every node, so f_th=1 kills all 64 nodes
    # in the first round; the second round removes nothing and terminates
    net = build_torus(LatticeConfig(8))
    casc = run_cascade(net, FailureScenario(0, 1), CascadeParams(f_th=1),
                       NavigationPolicy(2, hop_limit=16))
    assert casc.rounds == [64, 0]
    assert casc.f_max_rounds[0] == 193
    assert casc.overload_failed == 64
    assert casc.final_alive == 0
    assert casc.terminated
    assert casc.overload_fraction(64) == 1.0


def test_cascade_no_overload_single_round():
    net = build_torus(LatticeConfig(8))
    casc = run_cascade(net, FailureScenario(5, 2), CascadeParams(f_th=10 ** 6),
                       NavigationPolicy(2, hop_limit=16))
    assert casc.rounds == [0]
    assert casc.overload_failed == 0
    assert casc.initially_failed == 5
    assert casc.final_alive == 59
    assert casc.terminated


def test_cascade_respects_max_rounds():
    # one round allowed but the first round still removes nodes -> not terminated
    net = build_torus(LatticeConfig(8))
    casc = run_cascade(net, FailureScenario(0, 1),
                       CascadeParams(f_th=1, max_rounds=1),
                       NavigationPolicy(2, hop_limit=16))
    assert casc.rounds == [64]
    assert not casc.terminated


def test_cascade_alive_monotone_and_reports():
    net = generate_stochastic(LatticeConfig(16), StochasticParams(alpha=1.0, seed=2))
    casc = run_cascade(net, FailureScenario(20, 3), CascadeParams(f_th=900),
                       NavigationPolicy(2, hop_limit=32), collect_reports=True)
    assert casc.terminated
    assert len(casc.reports) == len(casc.rounds)
    alive = 256 - 20
    for removed in casc.rounds:
        assert removed >= 0
        alive -= removed
    assert alive == casc.final_alive
    assert casc.overload_failed == sum(casc.rounds)


def test_cascade_sampled_messages_shrink_with_network():
    # f_th=1 empties the torus; the sampled message set must adapt each round
    net = build_torus(LatticeConfig(8))
    casc = run_cascade(net, FailureScenario(0, 1), CascadeParams(f_th=1),
                       NavigationPolicy(2, hop_limit=16),
                       message_mode=MODE_SAMPLED, m=500, message_seed=11)
    assert casc.rounds == [64, 0]
    assert casc.final_alive == 0
    assert casc.terminated


def test_cascade_trace_csv_layout():
    report = CascadeReport(initially_failed=3, rounds=[2, 1, 0],
                           f_max_rounds=[50, 40, 30], overload_failed=3,
                           final_alive=58, terminated=True)
    text = cascade_trace_csv(report, N=64)
    assert text == (
        "# swtorus cascade trace\n"
        "# initially_failed=3 overload_failed=3 terminated=true\n"
        "round,removed,alive,f_max_this_round\n"
        "0,2,59,50\n"
        "1,1,58,40\n"
        "2,0,58,30\n"
    )
