import numpy as np
import pytest

from swtorus.topology import (
    KIND_IBT,
    KIND_STOCHASTIC,
    KIND_STOCHASTIC_FIXED,
    IbtParams,
    LatticeConfig,
    Network,
    StochasticParams,
    build_torus,
    generate_ibt,
    generate_stochastic,
    generate_stochastic_fixed_degree,
    make_network,
    network_from_text,
    network_to_text,
    node_coords,
    node_index,
    shortcut_lengths,
    torus_distance,
    unit_wiring_cost,
)


def shortcut_set(net: Network) -> set:
    return set(map(tuple, net.shortcuts.tolist()))


def assert_valid_shortcuts(net: Network, expect_count: int = None):
    """Structural contract: canonical rows, no duplicates, no self/lattice links."""
    sc = net.shortcuts
    assert (sc[:, 0] < sc[:, 1]).all()
    codes = sc[:, 0] * net.config.N + sc[:, 1]
    assert len(np.unique(codes)) == len(sc)
    for a, b in sc:
        assert torus_distance(int(a), int(b), net.config) >= 2
    if expect_count is not None:
        assert len(sc) == expect_count


# ---------------------------------------------------------------- lattice


def test_lattice_config_validation():
    assert LatticeConfig(8).N == 64
    with pytest.raises(ValueError):
        LatticeConfig(3)


def test_node_index_coords_roundtrip():
    L = 8
    for v in range(L * L):
        i, j = node_coords(v, L)
        assert node_index(i, j, L) == v
    # wrap-around
    assert node_index(-1, 0, L) == node_index(L - 1, 0, L)
    assert node_index(0, L + 2, L) == 2


def test_torus_distance_examples():
    cfg = LatticeConfig(8)
    assert torus_distance(0, 0, cfg) == 0
    assert torus_distance(0, 1, cfg) == 1
    assert torus_distance(0, 7, cfg) == 1  # row wrap
    assert torus_distance(0, node_index(4, 4, 8), cfg) == 8  # antipode
    assert torus_distance(node_index(1, 1, 8), node_index(6, 7, 8), cfg) == 3 + 2


def test_torus_shell_sizes_L8():
    # admissible shortcut partners of any node at L=8: 59 nodes at r in 2..8
    cfg = LatticeConfig(8)
    counts = {}
    for v in range(1, cfg.N):
        counts[torus_distance(0, v, cfg)] = counts.get(torus_distance(0, v, cfg), 0) + 1
    assert counts == {1: 4, 2: 8, 3: 12, 4: 14, 5: 12, 6: 8, 7: 4, 8: 1}


def test_bare_torus_structure():
    net = build_torus(LatticeConfig(6))
    assert (net.degrees() == 4).all()
    assert len(net.shortcuts) == 0
    assert net.n_alive == 36
    # neighbors of (0, 0) are the four lattice partners
    assert sorted(net.neighbors(0).tolist()) == sorted(
        [node_index(1, 0, 6), node_index(5, 0, 6), node_index(0, 1, 6), node_index(0, 5, 6)]
    )


def test_make_network_rejects_bad_shortcuts():
    cfg = LatticeConfig(8)
    with pytest.raises(ValueError):
        make_network(cfg, KIND_STOCHASTIC, [(5, 5)])  # self
    with pytest.raises(ValueError):
        make_network(cfg, KIND_STOCHASTIC, [(1, 0)])  # not canonical
    with pytest.raises(ValueError):
        make_network(cfg, KIND_STOCHASTIC, [(0, 1)])  # lattice link
    with pytest.raises(ValueError):
        make_network(cfg, KIND_STOCHASTIC, [(0, 18), (0, 18)])  # duplicate
    with pytest.raises(ValueError):
        make_network(cfg, KIND_STOCHASTIC, [(0, 64)])  # out of range
    with pytest.raises(ValueError):
        make_network(cfg, "mystery", [(0, 18)])


def test_with_failed_does_not_mutate():
    net = build_torus(LatticeConfig(6))
    failed = net.with_failed([0, 7])
    assert net.alive.all()
    assert failed.n_alive == 34
    assert set(failed.failed_ids().tolist()) == {0, 7}
    # adjacency structure is shared and unchanged
    assert failed.degrees().sum() == net.degrees().sum()


# ---------------------------------------------------------------- stochastic


def test_stochastic_contract_and_determinism():
    cfg = LatticeConfig(8)
    params = StochasticParams(alpha=1.0, seed=42)
    net = generate_stochastic(cfg, params)
    assert_valid_shortcuts(net, expect_count=cfg.N)
    again = generate_stochastic(cfg, params)
    assert shortcut_set(net) == shortcut_set(again)
    other = generate_stochastic(cfg, StochasticParams(alpha=1.0, seed=43))
    assert shortcut_set(net) != shortcut_set(other)


def test_stochastic_mean_degree_six():
    net = generate_stochastic(LatticeConfig(8), StochasticParams(alpha=1.0, seed=3))
    deg = net.degrees()
    # N shortcuts with 2 endpoints over N nodes on top of the base 4
    assert deg.mean() == 6.0
    assert deg.min() >= 5  # every node drew at least its own shortcut


def test_stochastic_alpha_large_prefers_distance_two():
    # alpha -> large concentrates all weight at r = 2, so unit cost -> 2
    net = generate_stochastic(LatticeConfig(16), StochasticParams(alpha=50.0, seed=7))
    assert (shortcut_lengths(net) == 2).all()
    assert unit_wiring_cost(net) == 2.0


def test_stochastic_alpha_validation():
    with pytest.raises(ValueError):
        StochasticParams(alpha=-0.5)


# ------------------------------------------------------- fixed-degree


def test_fixed_degree_exact_degree_spike():
    cfg = LatticeConfig(8)
    net = generate_stochastic_fixed_degree(cfg, StochasticParams(alpha=1.0, seed=5))
    assert_valid_shortcuts(net, expect_count=cfg.N)
    assert (net.degrees() == 6).all()
    endpoints = np.bincount(net.shortcuts.ravel(), minlength=cfg.N)
    assert (endpoints == 2).all()


def test_fixed_degree_determinism_and_dispatch():
    cfg = LatticeConfig(8)
    a = generate_stochastic_fixed_degree(cfg, StochasticParams(alpha=1.0, seed=11))
    b = generate_stochastic(cfg, StochasticParams(alpha=1.0, seed=11, fixed_degree=True))
    assert shortcut_set(a) == shortcut_set(b)
    assert a.kind == KIND_STOCHASTIC_FIXED


def test_fixed_degree_rejects_odd_node_count():
    with pytest.raises(ValueError):
        generate_stochastic_fixed_degree(LatticeConfig(5), StochasticParams(alpha=1.0, seed=0))


# ---------------------------------------------------------------- iBT


def test_ibt_structure_L8():
    cfg = LatticeConfig(8)
    net = generate_ibt(cfg, IbtParams(2, 4))
    assert_valid_shortcuts(net)
    assert (net.degrees() == 6).all()
    endpoints = np.bincount(net.shortcuts.ravel(), minlength=cfg.N)
    assert (endpoints == 2).all()


def test_ibt_unit_cost_is_mean_bypass_length():
    # every node carries 2 endpoints, so total length / N = (s1 + s2) / 2
    net = generate_ibt(LatticeConfig(64), IbtParams(8, 32))
    assert unit_wiring_cost(net) == pytest.approx((8 + 32) / 2)
    net16 = generate_ibt(LatticeConfig(16), IbtParams(2, 4))
    assert unit_wiring_cost(net16) == pytest.approx(3.0)


def test_ibt_translation_invariance_period_four():
    # the interlacing repeats every 4 rows and 4 columns
    L = 16
    net = generate_ibt(LatticeConfig(L), IbtParams(2, 4))
    sc = shortcut_set(net)

    def shift(pairs, di, dj):
        out = set()
        for a, b in pairs:
            a2 = node_index(a // L + di, a % L + dj, L)
            b2 = node_index(b // L + di, b % L + dj, L)
            out.add((a2, b2) if a2 < b2 else (b2, a2))
        return out

    assert shift(sc, 4, 0) == sc
    assert shift(sc, 0, 4) == sc
    assert shift(sc, 4, 4) == sc


def test_ibt_param_validation():
    with pytest.raises(ValueError):
        IbtParams(3, 4)  # odd
    with pytest.raises(ValueError):
        IbtParams(4, 4)  # equal
    with pytest.raises(ValueError):
        generate_ibt(LatticeConfig(16), IbtParams(2, 6))  # 16 % 6 != 0
    with pytest.raises(ValueError):
        generate_ibt(LatticeConfig(8), IbtParams(2, 8))  # s > L/2
    with pytest.raises(ValueError):
        generate_ibt(LatticeConfig(12), IbtParams(2, 6))  # s = L/2 needs L % 8 == 0


def test_ibt_half_ring_compensation():
    # s2 = L/2 degenerates the +/- bypass endpoints; degree must stay exactly 6
    net = generate_ibt(LatticeConfig(8), IbtParams(2, 4))
    half = generate_ibt(LatticeConfig(8), IbtParams(4, 2))
    for n in (net, half):
        assert (n.degrees() == 6).all()
    big = generate_ibt(LatticeConfig(16), IbtParams(4, 8))  # s2 = L/2
    assert (big.degrees() == 6).all()
    assert len(big.shortcuts) == big.config.N


def test_ibt_connected():
    from swtorus import engine

    net = generate_ibt(LatticeConfig(16), IbtParams(2, 4))
    d, connected = engine.average_distance(net)
    assert connected


# ---------------------------------------------------------------- serialization


def test_network_text_roundtrip():
    net = generate_stochastic(LatticeConfig(8), StochasticParams(alpha=1.0, seed=9))
    text = network_to_text(net)
    back = network_from_text(text)
    assert back.config.L == 8
    assert back.kind == KIND_STOCHASTIC
    assert np.array_equal(back.shortcuts, net.shortcuts)
    assert network_to_text(back) == text  # bit-exact fixed point


def test_network_text_roundtrip_with_failures():
    net = generate_ibt(LatticeConfig(8), IbtParams(2, 4)).with_failed([3, 17, 40])
    text = network_to_text(net)
    assert "FAILED" in text
    back = network_from_text(text)
    assert set(back.failed_ids().tolist()) == {3, 17, 40}
    assert network_to_text(back) == text


def test_network_text_header_format():
    net = build_torus(LatticeConfig(8))
    assert network_to_text(net) == "L=8 kind=torus\n"
    with pytest.raises(ValueError):
        network_from_text("bogus\n")
