import numpy as np
import pytest

from adhocnet.errors import UnreachableSessionError
from adhocnet.netmodel import Scenario, SessionSet, build_network, \
    compute_link_gains
from adhocnet.phy import sir_matched
from adhocnet.routing import (
    RouteSet,
    assign_routes,
    build_link_costs,
    build_routing_table,
    estimated_sir,
    estimated_sir_matrix,
    initial_routes,
    shortest_path,
)
from helpers import brute_force_shortest, random_network, \
    topology_from_positions

GAMMA = 12.5
NOISE = 1e-13


def test_estimated_sir_no_other_transmitters():
    topo = topology_from_positions([[0.0, 0.0], [100.0, 0.0], [50.0, 80.0]])
    gains = compute_link_gains(topo, 2.0)
    p = np.array([1e-6, 0.0, 0.0])
    table = build_routing_table(gains, p)
    got = estimated_sir(0, 1, table, 16, NOISE)
    assert got == pytest.approx(gains.gains[0, 1] * p[0] / NOISE, rel=1e-12)


def test_estimated_sir_equals_matched_sir_exactly():
    rng = np.random.default_rng(0)
    _, gains = random_network(rng, 9)
    p = np.exp(rng.uniform(np.log(1e-8), np.log(1e-6), 9))
    table = build_routing_table(gains, p)
    for i in range(9):
        for j in range(9):
            if i == j:
                continue
            est = estimated_sir(i, j, table, 32, NOISE)
            direct = sir_matched((i, j), p, gains, 32, NOISE)
            assert est == direct  # bit-identical by construction


def test_estimated_sir_matrix_matches_scalar_path():
    rng = np.random.default_rng(1)
    _, gains = random_network(rng, 7)
    p = rng.uniform(0.0, 1e-6, 7)
    p[3] = 0.0
    table = build_routing_table(gains, p)
    matrix = estimated_sir_matrix(table, 16, NOISE)
    for i in range(7):
        for j in range(7):
            if i == j:
                assert matrix[i, j] == 0.0
            else:
                assert matrix[i, j] == estimated_sir(i, j, table, 16, NOISE)
    assert np.all(matrix[3, :] == 0.0)  # zero power cannot reach anyone


def test_extended_interference_bounds():
    rng = np.random.default_rng(2)
    _, gains = random_network(rng, 6)
    p = rng.uniform(1e-8, 1e-6, 6)
    table = build_routing_table(gains, p)
    for i in range(6):
        for j in range(6):
            if i != j:
                assert table.ext_interference[i, j] >= \
                    gains.gains[i, j] * p[i] - 1e-30


def test_link_costs_boundary_sir_is_admitted():
    # powers of two keep the arithmetic exact, so the estimated SIR equals
    # the target exactly and the boundary rule (>=) is visible
    gains_matrix = np.array([[0.0, 2.0 ** -10], [2.0 ** -10, 0.0]])
    gains_matrix.setflags(write=False)
    from adhocnet.netmodel import LinkGainMatrix

    gains = LinkGainMatrix(gains=gains_matrix)
    noise = 2.0 ** -40
    target = 12.5
    p_exact = target * noise / 2.0 ** -10  # receiver sees exactly target
    p = np.array([p_exact, 0.0])
    table = build_routing_table(gains, p)
    assert estimated_sir(0, 1, table, 1, noise) == target
    costs = build_link_costs(p, table, target, 1, noise)
    assert costs[0, 1] == p_exact
    # strictly below target gates out
    p_low = np.array([p_exact * 0.999, 0.0])
    table_low = build_routing_table(gains, p_low)
    costs_low = build_link_costs(p_low, table_low, target, 1, noise)
    assert costs_low[0, 1] == np.inf


def test_link_costs_zero_power_is_gated():
    rng = np.random.default_rng(3)
    _, gains = random_network(rng, 4)
    p = np.array([0.0, 1e-6, 1e-6, 1e-6])
    table = build_routing_table(gains, p)
    costs = build_link_costs(p, table, GAMMA, 16, NOISE)
    assert np.all(costs[0, :] == np.inf)


def test_shortest_path_two_nodes():
    costs = np.array([[np.inf, 3.0], [3.0, np.inf]])
    assert shortest_path(costs, 0, 1) == [0, 1]


def test_shortest_path_triangle():
    costs = np.full((3, 3), np.inf)
    costs[0, 2] = 5.0
    costs[0, 1] = 2.0
    costs[1, 2] = 2.0
    assert shortest_path(costs, 0, 2) == [0, 1, 2]


def test_shortest_path_unreachable_is_none():
    costs = np.full((3, 3), np.inf)
    costs[0, 1] = 1.0
    assert shortest_path(costs, 0, 2) is None


def test_shortest_path_matches_enumeration_oracle():
    rng = np.random.default_rng(4)
    for trial in range(30):
        n = 8
        costs = rng.uniform(0.5, 3.0, size=(n, n))
        costs[rng.uniform(size=(n, n)) < 0.35] = np.inf
        np.fill_diagonal(costs, np.inf)
        got = shortest_path(costs, 0, n - 1)
        expected = brute_force_shortest(costs, 0, n - 1)
        assert got == expected


def test_shortest_path_lexicographic_ties():
    rng = np.random.default_rng(5)
    for trial in range(30):
        n = 7
        # small integer costs force plenty of exact ties
        costs = rng.choice([1.0, 2.0], size=(n, n))
        costs[rng.uniform(size=(n, n)) < 0.25] = np.inf
        np.fill_diagonal(costs, np.inf)
        got = shortest_path(costs, 0, n - 1)
        expected = brute_force_shortest(costs, 0, n - 1)
        assert got == expected


def test_assign_routes_direct_when_cheapest():
    n = 4
    costs = np.full((n, n), np.inf)
    for i in range(n):
        for j in range(n):
            if i != j:
                costs[i, j] = 1.0
    sessions = SessionSet(sessions=((0, 3), (1, 2), (2, 0), (3, 1)))
    routes = assign_routes(sessions, costs)
    assert routes.paths == ((0, 3), (1, 2), (2, 0), (3, 1))


def test_assign_routes_unreachable_names_session():
    costs = np.full((3, 3), np.inf)
    costs[0, 1] = 1.0
    sessions = SessionSet(sessions=((0, 1), (1, 2)))
    with pytest.raises(UnreachableSessionError) as err:
        assign_routes(sessions, costs)
    assert err.value.session == 1
    assert err.value.source == 1
    assert err.value.destination == 2


def test_assign_routes_total_cost_matches_brute_force():
    rng = np.random.default_rng(6)
    n = 6
    costs = rng.uniform(0.1, 2.0, size=(n, n))
    np.fill_diagonal(costs, np.inf)
    sessions = SessionSet(sessions=tuple(
        (i, int((i + 2) % n)) for i in range(n)
    ))
    routes = assign_routes(sessions, costs)
    for (s, d), path in zip(sessions.sessions, routes.paths):
        total = sum(costs[a, b] for a, b in zip(path[:-1], path[1:]))
        oracle = brute_force_shortest(costs, s, d)
        oracle_cost = sum(costs[a, b] for a, b in zip(oracle[:-1], oracle[1:]))
        assert total == pytest.approx(oracle_cost, rel=1e-12)


def test_active_links_derived_from_paths():
    routes = RouteSet(paths=((0, 2, 1), (1, 0)), n_nodes=3)
    assert set(routes.active_links.links) == {(0, 2), (2, 1), (1, 0)}
    assert routes.active_links.outgoing[0] == (2,)


def test_route_set_rejects_degenerate_paths():
    with pytest.raises(ValueError):
        RouteSet(paths=((0,),), n_nodes=2)
    with pytest.raises(ValueError):
        RouteSet(paths=((0, 1, 0),), n_nodes=2)


def test_initial_routes_two_nodes_direct():
    scenario = Scenario(n_nodes=2, spreading_gain=16, master_seed=1)
    net = build_network(scenario)
    p0 = np.full(2, scenario.initial_power)
    routes = initial_routes(scenario, net.gains, net.sessions, p0)
    assert routes.paths == ((0, 1), (1, 0))


def test_initial_routes_collinear_multihop_beats_direct():
    from adhocnet.phy import energy_per_bit_link

    scenario = Scenario(n_nodes=4, spreading_gain=32, master_seed=1,
                        target_sir=12.5)
    topo = topology_from_positions(
        [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]], area_side=10.0)
    gains = compute_link_gains(topo, 2.0)
    sessions = SessionSet(sessions=((0, 3), (1, 0), (2, 1), (3, 2)))
    p0 = np.full(4, scenario.initial_power)
    routes = initial_routes(scenario, gains, sessions, p0)
    assert routes.paths[0] == (0, 1, 2, 3)
    # oracle: energy per bit of the hop path beats the direct link
    table = build_routing_table(gains, p0)

    def link_energy(link):
        sir = estimated_sir(link[0], link[1], table, scenario.spreading_gain,
                            scenario.noise_power)
        return energy_per_bit_link(link, p0, sir, scenario.bit_rate,
                                   scenario.packet_bits)

    direct = link_energy((0, 3))
    hops = sum(link_energy(l) for l in [(0, 1), (1, 2), (2, 3)])
    assert hops < direct


def test_initial_routes_smoke_at_full_scale():
    scenario = Scenario(n_nodes=55, spreading_gain=128, master_seed=0)
    net = build_network(scenario)
    p0 = np.full(55, scenario.initial_power)
    routes = initial_routes(scenario, net.gains, net.sessions, p0)
    assert len(routes.paths) == 55
    from adhocnet.powercontrol import pc_iterate

    result = pc_iterate(p0, routes.active_links, net.gains, 128,
                        scenario.noise_power, scenario.target_sir)
    assert result.status in ("converged", "infeasible", "max_iter")


def test_route_invariance_of_estimated_sir():
    # the estimate reads only gains and powers, so any two route sets see
    # identical values at fixed converged powers
    rng = np.random.default_rng(8)
    scenario = Scenario(n_nodes=10, spreading_gain=64, master_seed=4)
    net = build_network(scenario)
    p0 = np.full(10, scenario.initial_power)
    routes_a = initial_routes(scenario, net.gains, net.sessions, p0)
    from adhocnet.powercontrol import pc_iterate

    res = pc_iterate(p0, routes_a.active_links, net.gains, 64,
                     scenario.noise_power, scenario.target_sir)
    assert res.converged
    table_a = build_routing_table(net.gains, res.powers)
    matrix_a = estimated_sir_matrix(table_a, 64, scenario.noise_power)
    # a different (arbitrary) route set
    paths = tuple((i, int((i + 3) % 10)) for i in range(10))
    RouteSet(paths=paths, n_nodes=10)
    table_b = build_routing_table(net.gains, res.powers)
    matrix_b = estimated_sir_matrix(table_b, 64, scenario.noise_power)
    assert np.array_equal(matrix_a, matrix_b)


def test_gating_soundness_of_assigned_routes():
    scenario = Scenario(n_nodes=10, spreading_gain=64, master_seed=12)
    net = build_network(scenario)
    p0 = np.full(10, scenario.initial_power)
    routes0 = initial_routes(scenario, net.gains, net.sessions, p0)
    from adhocnet.powercontrol import pc_iterate

    res = pc_iterate(p0, routes0.active_links, net.gains, 64,
                     scenario.noise_power, scenario.target_sir)
    assert res.converged
    table = build_routing_table(net.gains, res.powers)
    matrix = estimated_sir_matrix(table, 64, scenario.noise_power)
    costs = build_link_costs(res.powers, table, scenario.target_sir, 64,
                             scenario.noise_power)
    routes = assign_routes(net.sessions, costs)
    for i, j in routes.active_links.links:
        assert matrix[i, j] >= scenario.target_sir
