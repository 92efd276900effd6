import numpy as np
import pytest

from adhocnet.netmodel import SpreadingCodebook, compute_link_gains, \
    generate_spreading_codebook
from adhocnet.powercontrol import (
    ActiveLinkSet,
    interference_target,
    pc_iterate,
    pc_mud_iterate,
    power_targets,
)
from helpers import (
    random_active_links,
    random_network,
    single_outgoing_instance,
    topology_from_positions,
)

GAMMA = 12.5
NOISE = 1e-13


def test_interference_target_single_isolated_link():
    topo = topology_from_positions([[0.0, 0.0], [100.0, 0.0]])
    gains = compute_link_gains(topo, 2.0)
    active = ActiveLinkSet.from_links(2, [(0, 1)])
    t = interference_target(0, np.zeros(2), active, gains, 128, NOISE, GAMMA)
    assert t == pytest.approx(1.25e-8, rel=1e-12)


def test_interference_target_takes_worst_outgoing_link():
    topo = topology_from_positions([[0.0, 0.0], [10.0, 0.0], [50.0, 0.0],
                                    [0.0, 30.0]])
    gains = compute_link_gains(topo, 2.0)
    active = ActiveLinkSet.from_links(4, [(0, 1), (0, 2), (3, 1)])
    rng = np.random.default_rng(0)
    p = rng.uniform(1e-8, 1e-6, 4)
    got = interference_target(0, p, active, gains, 16, NOISE, GAMMA)
    g = gains.gains
    per_link = []
    for j in (1, 2):
        interference = sum(g[k, j] * p[k] for k in range(4)
                           if k not in (0, j)) / 16 + NOISE
        per_link.append(GAMMA * interference / g[0, j])
    assert got == pytest.approx(max(per_link), rel=1e-12)


def test_interference_target_zero_powers_noise_floor():
    topo = topology_from_positions([[0.0, 0.0], [100.0, 0.0], [40.0, 70.0]])
    gains = compute_link_gains(topo, 2.0)
    active = ActiveLinkSet.from_links(3, [(0, 1), (0, 2)])
    t = interference_target(0, np.zeros(3), active, gains, 16, NOISE, GAMMA)
    g = gains.gains
    assert t == pytest.approx(max(GAMMA * NOISE / g[0, 1],
                                  GAMMA * NOISE / g[0, 2]), rel=1e-12)


def test_interference_target_requires_outgoing_links():
    topo = topology_from_positions([[0.0, 0.0], [100.0, 0.0]])
    gains = compute_link_gains(topo, 2.0)
    active = ActiveLinkSet.from_links(2, [(0, 1)])
    with pytest.raises(ValueError):
        interference_target(1, np.zeros(2), active, gains, 16, NOISE, GAMMA)


def test_pc_single_link_converges_in_two_iterations():
    topo = topology_from_positions([[0.0, 0.0], [100.0, 0.0]])
    gains = compute_link_gains(topo, 2.0)
    active = ActiveLinkSet.from_links(2, [(0, 1)])
    result = pc_iterate(np.zeros(2), active, gains, 128, NOISE, GAMMA)
    assert result.converged
    assert result.iterations <= 2
    assert result.powers[0] == pytest.approx(1.25e-8, rel=1e-10)
    assert result.powers[1] == 0.0


def test_pc_two_link_fixed_point_matches_linear_solve():
    topo = topology_from_positions([[0.0, 0.0], [10.0, 0.0],
                                    [60.0, 5.0], [70.0, 5.0]])
    gains = compute_link_gains(topo, 2.0)
    active = ActiveLinkSet.from_links(4, [(0, 1), (2, 3)])
    spreading = 16
    g = gains.gains
    # p0 = a01 * p2 + b0 ; p2 = a23 * p0 + b2
    a01 = GAMMA / spreading * g[2, 1] / g[0, 1]
    b0 = GAMMA * NOISE / g[0, 1]
    a23 = GAMMA / spreading * g[0, 3] / g[2, 3]
    b2 = GAMMA * NOISE / g[2, 3]
    m = np.array([[0.0, a01], [a23, 0.0]])
    expected = np.linalg.solve(np.eye(2) - m, [b0, b2])
    result = pc_iterate(np.zeros(4), active, gains, spreading, NOISE, GAMMA,
                        tol=1e-12, max_iter=100_000)
    assert result.converged
    assert result.powers[0] == pytest.approx(expected[0], rel=1e-9)
    assert result.powers[2] == pytest.approx(expected[1], rel=1e-9)


def test_pc_detects_infeasible_instance():
    # two crossing links close together, spectral radius above one
    topo = topology_from_positions([[0.0, 0.0], [10.0, 0.0],
                                    [0.0, 1.0], [10.0, 1.0]])
    gains = compute_link_gains(topo, 2.0)
    active = ActiveLinkSet.from_links(4, [(0, 1), (2, 3)])
    spreading, gamma = 2, 5.0
    g = gains.gains
    ratio = (gamma / spreading) ** 2 * (g[2, 1] / g[0, 1]) * (g[0, 3] / g[2, 3])
    assert ratio > 1.0  # spectral oracle: product of coupling ratios
    result = pc_iterate(np.full(4, 1e-6), active, gains, spreading, NOISE,
                        gamma)
    assert result.status == "infeasible"


def test_pc_converged_powers_meet_target_sir():
    from adhocnet.phy import sir_matched

    rng = np.random.default_rng(5)
    checked = 0
    while checked < 20:
        inst = single_outgoing_instance(rng, 6, 16, GAMMA, NOISE)
        if inst is None:
            continue
        _, gains, active, _, _ = inst
        result = pc_iterate(np.zeros(6), active, gains, 16, NOISE, GAMMA,
                            tol=1e-8)
        assert result.converged
        for i in active.transmitters:
            sirs = [sir_matched((i, j), result.powers, gains, 16, NOISE)
                    for j in active.outgoing[i]]
            assert min(sirs) == pytest.approx(GAMMA, rel=1e-6)
        checked += 1


def test_pc_monotone_from_zero():
    rng = np.random.default_rng(7)
    topology, gains = random_network(rng, 8)
    active = random_active_links(rng, 8)
    p = np.zeros(8)
    previous = p
    for _ in range(40):
        p = power_targets(previous, active, gains, 64, NOISE, GAMMA)
        assert np.all(p >= previous - 1e-25)
        previous = p


def test_pc_schedules_agree():
    rng = np.random.default_rng(9)
    found = 0
    while found < 5:
        inst = single_outgoing_instance(rng, 8, 32, GAMMA, NOISE)
        if inst is None:
            continue
        _, gains, active, oracle, _ = inst
        tol = 1e-9
        sync = pc_iterate(np.zeros(8), active, gains, 32, NOISE, GAMMA,
                          tol=tol, max_iter=100_000, schedule="synchronous")
        askew = pc_iterate(np.zeros(8), active, gains, 32, NOISE, GAMMA,
                           tol=tol, max_iter=100_000, schedule="async-sweep")
        assert sync.converged and askew.converged
        assert np.allclose(sync.powers, askew.powers, rtol=10 * tol)
        assert np.allclose(sync.powers, oracle, rtol=1e-6)
        found += 1


def test_standard_interference_function_axioms_small():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(4, 10))
        _, gains = random_network(rng, n)
        active = random_active_links(rng, n)
        spreading = int(rng.choice([8, 16, 64]))
        gamma = float(rng.uniform(1.0, 15.0))
        p = np.exp(rng.uniform(np.log(1e-9), np.log(1e-5), n))
        shrink = rng.uniform(0.0, 1.0, n)
        smaller = p * shrink
        alpha = float(rng.uniform(1.01, 10.0))
        t = power_targets(p, active, gains, spreading, NOISE, gamma)
        t_small = power_targets(smaller, active, gains, spreading, NOISE, gamma)
        t_scaled = power_targets(alpha * p, active, gains, spreading, NOISE,
                                 gamma)
        tx = list(active.transmitters)
        assert np.all(t[tx] > 0.0)
        assert np.all(t[tx] >= t_small[tx] * (1 - 1e-12))
        assert np.all(alpha * t[tx] > t_scaled[tx] * (1 - 1e-12))


def test_pc_mud_zero_interference_equals_matched():
    topo = topology_from_positions([[0.0, 0.0], [100.0, 0.0]])
    gains = compute_link_gains(topo, 2.0)
    book = generate_spreading_codebook(2, 8, seed=1)
    active = ActiveLinkSet.from_links(2, [(0, 1)])
    matched = pc_iterate(np.zeros(2), active, gains, 8, NOISE, GAMMA,
                         tol=1e-10)
    mud, filters = pc_mud_iterate(np.zeros(2), active, gains, book, NOISE,
                                  GAMMA, tol=1e-10)
    assert mud.converged
    assert mud.powers[0] == pytest.approx(matched.powers[0], rel=1e-8)
    assert (0, 1) in filters.filters


def test_pc_mud_beats_exact_matched_power():
    rng = np.random.default_rng(13)
    done = 0
    while done < 5:
        topology, gains = random_network(rng, 6)
        book = generate_spreading_codebook(6, 8, seed=int(rng.integers(1e6)))
        active = random_active_links(rng, 6, max_out=1)
        mud, _ = pc_mud_iterate(np.zeros(6), active, gains, book, NOISE,
                                GAMMA, tol=1e-10, max_iter=50_000)
        mf, _ = pc_mud_iterate(np.zeros(6), active, gains, book, NOISE,
                               GAMMA, tol=1e-10, max_iter=50_000,
                               filter_mode="matched")
        if not (mud.converged and mf.converged):
            continue
        assert mud.powers.sum() <= mf.powers.sum() * (1 + 1e-9)
        done += 1


def test_pc_mud_feasible_where_matched_is_not():
    # crossing links, nearly orthogonal sequences: the LMMSE receiver can
    # null the single interferer while the 1/L matched model diverges
    topo = topology_from_positions([[0.0, 0.0], [10.0, 0.0],
                                    [0.0, 1.0], [10.0, 1.0]])
    gains = compute_link_gains(topo, 2.0)
    seqs = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0], [0.5, -0.5]])
    seqs = seqs / np.linalg.norm(seqs, axis=1, keepdims=True)
    seqs.setflags(write=False)
    book = SpreadingCodebook(sequences=seqs)
    active = ActiveLinkSet.from_links(4, [(0, 1), (2, 3)])
    spreading, gamma = 2, 5.0
    matched = pc_iterate(np.full(4, 1e-6), active, gains, spreading, NOISE,
                         gamma)
    assert matched.status == "infeasible"
    mud, _ = pc_mud_iterate(np.full(4, 1e-6), active, gains, book, NOISE,
                            gamma)
    assert mud.converged


def test_pc_mud_converged_sir_meets_target():
    from adhocnet.phy import sir_lmmse

    rng = np.random.default_rng(15)
    topology, gains = random_network(rng, 6)
    book = generate_spreading_codebook(6, 16, seed=8)
    active = random_active_links(rng, 6, max_out=2)
    result, filters = pc_mud_iterate(np.zeros(6), active, gains, book, NOISE,
                                     GAMMA, tol=1e-9, max_iter=50_000)
    assert result.converged
    for i in active.transmitters:
        sirs = [sir_lmmse((i, j), result.powers, filters, gains, book, NOISE)
                for j in active.outgoing[i]]
        assert min(sirs) == pytest.approx(GAMMA, rel=1e-6)


def test_trace_records_totals(tmp_path):
    from adhocnet.powercontrol import pc_trace_to_csv

    topo = topology_from_positions([[0.0, 0.0], [100.0, 0.0]])
    gains = compute_link_gains(topo, 2.0)
    active = ActiveLinkSet.from_links(2, [(0, 1)])
    result = pc_iterate(np.zeros(2), active, gains, 128, NOISE, GAMMA)
    assert result.trace[0] == 0.0
    assert result.trace[-1] == pytest.approx(result.powers.sum(), rel=1e-12)
    path = tmp_path / "pc_trace.csv"
    pc_trace_to_csv(result, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "iteration,total_power_W"
    assert len(lines) == len(result.trace) + 1
