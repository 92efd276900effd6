"""Shared builders and brute-force oracles for the test suite."""

import itertools

import numpy as np

from adhocnet.netmodel import LinkGainMatrix, Topology, compute_link_gains
from adhocnet.powercontrol import ActiveLinkSet


def topology_from_positions(positions, area_side=200.0):
    pos = np.asarray(positions, dtype=float)
    pos.setflags(write=False)
    return Topology(positions=pos, area_side=area_side)


def random_network(rng, n, area=200.0, path_loss_exp=2.0):
    positions = rng.uniform(0.0, area, size=(n, 2))
    topology = topology_from_positions(positions, area)
    return topology, compute_link_gains(topology, path_loss_exp)


def random_active_links(rng, n, max_out=2):
    """Random active link set; each node gets 1..max_out outgoing links."""
    links = []
    for i in range(n):
        n_out = int(rng.integers(1, max_out + 1))
        targets = rng.choice([j for j in range(n) if j != i],
                             size=min(n_out, n - 1), replace=False)
        links.extend((i, int(j)) for j in targets)
    return ActiveLinkSet.from_links(n, links)


def single_outgoing_instance(rng, n, spreading_gain, target_sir, noise,
                             area=200.0, rho_max=0.9):
    """Random instance where every node has exactly one outgoing link and
    the linearized system is feasible with margin; returns the exact fixed
    point from the linear solve as an oracle, or None when infeasible."""
    topology, gains = random_network(rng, n, area)
    dests = [int(rng.choice([j for j in range(n) if j != i])) for i in range(n)]
    active = ActiveLinkSet.from_links(n, [(i, dests[i]) for i in range(n)])
    g = gains.gains
    m = np.zeros((n, n))
    b = np.zeros(n)
    for i in range(n):
        j = dests[i]
        for k in range(n):
            if k != i and k != j:
                m[i, k] = target_sir / spreading_gain * g[k, j] / g[i, j]
        b[i] = target_sir * noise / g[i, j]
    rho = float(np.max(np.abs(np.linalg.eigvals(m))))
    if rho >= rho_max:
        return None
    fixed_point = np.linalg.solve(np.eye(n) - m, b)
    if np.any(fixed_point <= 0):
        return None
    return topology, gains, active, fixed_point, rho


def enumerate_simple_paths(costs, source, dest):
    """All simple paths with finite total cost, as (cost, path) pairs."""
    n = costs.shape[0]
    others = [v for v in range(n) if v not in (source, dest)]
    results = []
    for r in range(len(others) + 1):
        for middle in itertools.permutations(others, r):
            path = (source,) + middle + (dest,)
            total = 0.0
            for a, b in zip(path[:-1], path[1:]):
                total += costs[a, b]
                if not np.isfinite(total):
                    break
            if np.isfinite(total):
                results.append((total, path))
    return results


def brute_force_shortest(costs, source, dest):
    """Minimum-cost simple path with lexicographic tie-break, or None."""
    paths = enumerate_simple_paths(costs, source, dest)
    if not paths:
        return None
    best_cost = min(c for c, _ in paths)
    ties = [p for c, p in paths if c == best_cost]
    return list(min(ties))


def simplex_grid_search(pmat, target, step=1e-3):
    """Objective minimum of ||P w - target||^2 over a simplex grid.

    Supports up to three candidates; the grid walks the first N_s - 1
    coordinates in increments of ``step``.
    """
    n_cand = pmat.shape[1]
    if n_cand == 1:
        w = np.array([1.0])
        r = pmat @ w - target
        return float(r @ r), w
    ticks = np.arange(0.0, 1.0 + step / 2, step)
    best = (np.inf, None)
    if n_cand == 2:
        w1 = ticks
        weights = np.stack([w1, 1.0 - w1])
    else:
        grid = [(a, b) for a in ticks for b in ticks if a + b <= 1.0 + 1e-12]
        arr = np.asarray(grid).T
        weights = np.vstack([arr, 1.0 - arr.sum(axis=0)])
    residual = pmat @ weights - target[:, None]
    objectives = np.einsum("ij,ij->j", residual, residual)
    k = int(np.argmin(objectives))
    return float(objectives[k]), weights[:, k].copy()
