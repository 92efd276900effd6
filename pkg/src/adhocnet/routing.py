"""Power-aware route computation.

The routing layer sees only the node powers and link gains. From them it
estimates the achievable SIR of every potential link (active or not), gates
links below the SIR target out of the graph by giving them infinite cost,
prices the remaining links at the transmitter's power, and runs Dijkstra
per session. The estimated SIR of a link coincides exactly with the
matched-filter SIR, so it does not depend on which routes are in use.

Initialization differs: before the first power-control run there are no
optimized powers to price links with, so links are priced by the energy per
bit they would consume if operated at the SIR target given the initial
interference, every link stays finite, and the route assignment is built on
a sparse strongly-connected skeleton of locally strong links and verified
(and repaired if needed) to admit a convergent power-control run.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from .errors import UnreachableSessionError
from .netmodel import LinkGainMatrix, Scenario, SessionSet
from .phy import efficiency, received_powers
from .powercontrol import ActiveLinkSet, pc_iterate

# Cost matrices are plain (n, n) float arrays with +inf for unusable links.
LinkCostMatrix = np.ndarray


@dataclass(frozen=True)
class RoutingTable:
    """Per-node view used to price links: gains, powers, and the extended
    estimated interference at every other node.

    The extended interference for link (i, j) is the total received power at
    j from all transmitters other than j itself; it includes i's own
    contribution, which the SIR estimate subtracts back out.
    """

    gains: LinkGainMatrix
    powers: np.ndarray
    ext_interference: np.ndarray  # (n, n); entry [i, j] applies to link (i, j)

    @property
    def n_nodes(self) -> int:
        return self.powers.shape[0]


def build_routing_table(gains: LinkGainMatrix, p: np.ndarray) -> RoutingTable:
    received = received_powers(gains, p)
    n = p.shape[0]
    ext = np.broadcast_to(received, (n, n)).copy()
    ext.setflags(write=False)
    powers = np.array(p, dtype=float)
    powers.setflags(write=False)
    return RoutingTable(gains=gains, powers=powers, ext_interference=ext)


def estimated_sir(i: int, j: int, table: RoutingTable, spreading_gain: int,
                  noise: float) -> float:
    """Estimated SIR of potential link (i, j) from the routing table.

    h(i,j) P_i / ( (1/L)(ext(i,j) - h(i,j) P_i) + noise ); identical to the
    matched-filter SIR because ext(i,j) minus the desired term is exactly
    the interference sum.
    """
    if i == j:
        raise ValueError("link endpoints must differ")
    num = table.gains.gains[i, j] * table.powers[i]
    denom = (table.ext_interference[i, j] - num) / spreading_gain + noise
    if denom == 0.0:
        return float("inf")
    return float(num / denom)


def estimated_sir_matrix(table: RoutingTable, spreading_gain: int,
                         noise: float) -> np.ndarray:
    """Estimated SIR for all ordered pairs; diagonal set to zero."""
    num = table.gains.gains * table.powers[:, None]
    denom = (table.ext_interference - num) / spreading_gain + noise
    with np.errstate(divide="ignore", invalid="ignore"):
        sir = num / denom
    bad = ~np.isfinite(sir)
    if np.any(bad):
        sir[bad] = np.where(num[bad] > 0, np.inf, 0.0)
    np.fill_diagonal(sir, 0.0)
    return sir


def build_link_costs(p: np.ndarray, table: RoutingTable, target_sir: float,
                     spreading_gain: int, noise: float,
                     sir_matrix: np.ndarray | None = None) -> LinkCostMatrix:
    """SIR-gated link costs: the transmitter's power when the estimated SIR
    reaches the target (boundary included), +inf otherwise.

    ``sir_matrix`` overrides the matched-filter estimate, e.g. with the
    achievable LMMSE SIR when that receiver is in use.
    """
    sir = sir_matrix if sir_matrix is not None \
        else estimated_sir_matrix(table, spreading_gain, noise)
    costs = np.where(sir >= target_sir, np.broadcast_to(p[:, None], sir.shape),
                     np.inf)
    np.fill_diagonal(costs, np.inf)
    return costs


def initial_route_costs(scenario: Scenario, gains: LinkGainMatrix,
                        p_init: np.ndarray) -> LinkCostMatrix:
    """Energy-per-bit link costs for the initialization phase (no SIR gate).

    A link is priced by the energy per bit it would consume when operated at
    the SIR target under the interference seen at the initial powers: the
    required transmit power is P_i * target / estimated_sir, and the packet
    success probability at target operation is a constant factor. The cost
    is finite for every link with nonzero estimated SIR, also below the
    target, so a starting route assignment always exists.
    """
    table = build_routing_table(gains, p_init)
    sir = estimated_sir_matrix(table, scenario.spreading_gain,
                               scenario.noise_power)
    success = float(efficiency(scenario.target_sir, scenario.packet_bits))
    # the success factor is a link-independent scale; if it underflows for a
    # tiny target, drop it rather than blanking every cost
    scale = scenario.bit_rate * success if success > 0.0 else scenario.bit_rate
    with np.errstate(divide="ignore"):
        required = scenario.target_sir * p_init[:, None] / sir
    costs = required / scale
    costs[~np.isfinite(costs)] = np.inf
    np.fill_diagonal(costs, np.inf)
    return costs


@dataclass(frozen=True)
class RouteSet:
    """One node path per session plus the derived active link set."""

    paths: tuple[tuple[int, ...], ...]
    n_nodes: int

    def __post_init__(self):
        for path in self.paths:
            if len(path) < 2:
                raise ValueError("a route needs at least two nodes")
            if len(set(path)) != len(path):
                raise ValueError(f"route {path} repeats a node")

    @cached_property
    def active_links(self) -> ActiveLinkSet:
        links = []
        for path in self.paths:
            links.extend(zip(path[:-1], path[1:]))
        return ActiveLinkSet.from_links(self.n_nodes, links)

    def rows(self):
        for k, path in enumerate(self.paths):
            for hop, node in enumerate(path):
                yield (k, hop, node)


def _dijkstra_dense(weights: np.ndarray, start: int) -> np.ndarray:
    """Single-source distances on a dense cost matrix (row = from-node)."""
    n = weights.shape[0]
    dist = np.full(n, np.inf)
    dist[start] = 0.0
    done = np.zeros(n, dtype=bool)
    for _ in range(n):
        candidate = np.where(done, np.inf, dist)
        u = int(np.argmin(candidate))
        if not np.isfinite(candidate[u]):
            break
        done[u] = True
        dist = np.minimum(dist, dist[u] + weights[u, :])
    return dist


def _distances_to(costs: np.ndarray, dest: int) -> np.ndarray:
    """Distance from every node to ``dest`` along the original edges."""
    return _dijkstra_dense(np.ascontiguousarray(costs.T), dest)


def _lex_path(costs: np.ndarray, rdist: np.ndarray, source: int,
              dest: int) -> list[int] | None:
    """Lexicographically smallest min-cost path using distances-to-dest.

    A neighbor v continues a shortest path from u exactly when
    cost(u, v) + rdist(v) == rdist(u); picking the smallest such v at every
    step yields the lexicographically smallest shortest path. Exact for
    strictly positive costs; zero-cost graphs fall back to the heap search.
    """
    if not np.isfinite(rdist[source]):
        return None
    n = costs.shape[0]
    path = [source]
    visited = np.zeros(n, dtype=bool)
    visited[source] = True
    u = source
    while u != dest:
        continues = (costs[u, :] + rdist == rdist[u]) & ~visited
        candidates = np.flatnonzero(continues)
        if candidates.size == 0 or len(path) > n:
            return _heap_lex_path(costs, source, dest)
        u = int(candidates[0])
        visited[u] = True
        path.append(u)
    return path


def _heap_lex_path(costs: np.ndarray, source: int,
                   dest: int) -> list[int] | None:
    """Reference Dijkstra carrying whole paths for exact lexicographic ties."""
    n = costs.shape[0]
    heap = [(0.0, (source,))]
    closed = np.zeros(n, dtype=bool)
    while heap:
        d, path = heapq.heappop(heap)
        u = path[-1]
        if closed[u]:
            continue
        closed[u] = True
        if u == dest:
            return list(path)
        row = costs[u, :]
        for v in np.flatnonzero(np.isfinite(row)):
            if not closed[v]:
                heapq.heappush(heap, (d + row[v], path + (int(v),)))
    return None


def shortest_path(costs: LinkCostMatrix, source: int,
                  dest: int) -> list[int] | None:
    """Minimum-total-cost simple path, or None when unreachable.

    Ties break to the path whose node sequence is lexicographically
    smallest. Costs must be nonnegative; entries of +inf mark absent links.
    """
    costs = np.asarray(costs, dtype=float)
    n = costs.shape[0]
    if costs.shape != (n, n):
        raise ValueError("cost matrix must be square")
    if not (0 <= source < n and 0 <= dest < n):
        raise ValueError("source or destination outside node range")
    finite = costs[np.isfinite(costs)]
    if finite.size and np.any(finite < 0):
        raise ValueError("costs must be nonnegative")
    if source == dest:
        return [source]
    if finite.size and np.any(finite == 0.0):
        return _heap_lex_path(costs, source, dest)
    rdist = _distances_to(costs, dest)
    return _lex_path(costs, rdist, source, dest)


def assign_routes(sessions: SessionSet, costs: LinkCostMatrix) -> RouteSet:
    """Minimum-cost route per session; raises when a session is unreachable."""
    costs = np.asarray(costs, dtype=float)
    n = costs.shape[0]
    finite = costs[np.isfinite(costs)]
    zero_costs = finite.size > 0 and bool(np.any(finite == 0.0))
    by_dest: dict[int, list[int]] = {}
    for k, (_, d) in enumerate(sessions.sessions):
        by_dest.setdefault(d, []).append(k)
    paths: list[tuple[int, ...] | None] = [None] * len(sessions.sessions)
    for dest, session_ids in sorted(by_dest.items()):
        rdist = None if zero_costs else _distances_to(costs, dest)
        for k in session_ids:
            source, _ = sessions.sessions[k]
            if zero_costs:
                path = _heap_lex_path(costs, source, dest)
            else:
                path = _lex_path(costs, rdist, source, dest)
            if path is None:
                raise UnreachableSessionError(k, source, dest)
            paths[k] = tuple(path)
    return RouteSet(paths=tuple(paths), n_nodes=n)


def _initial_skeleton(sir: np.ndarray, forbidden: np.ndarray) -> np.ndarray:
    """Sparse strongly-connected digraph of locally strong links.

    Every node contributes its best outgoing link and receives its best
    incoming link (by estimated SIR); remaining strongly connected
    components are then merged rounds-wise through their best outgoing
    links. Keeping the skeleton sparse matters: each extra outgoing link
    tightens a node's worst-link power constraint.
    """
    n = sir.shape[0]
    usable = np.where(forbidden, -1.0, sir)
    allowed = np.zeros((n, n), dtype=bool)
    for i in range(n):
        j = int(np.argmax(usable[i]))
        if usable[i, j] > 0:
            allowed[i, j] = True
    for j in range(n):
        i = int(np.argmax(usable[:, j]))
        if usable[i, j] > 0:
            allowed[i, j] = True
    while True:
        n_comp, labels = csgraph.connected_components(
            sp.csr_matrix(allowed), directed=True, connection="strong"
        )
        if n_comp == 1:
            break
        added = False
        for comp in range(n_comp):
            members = np.flatnonzero(labels == comp)
            outside = np.flatnonzero(labels != comp)
            block = usable[np.ix_(members, outside)]
            k = int(np.argmax(block))
            i = int(members[k // outside.size])
            j = int(outside[k % outside.size])
            if block.flat[k] > 0 and not allowed[i, j]:
                allowed[i, j] = True
                added = True
        if not added:
            break
    return allowed


def _probe_diverging(result) -> bool:
    """Did a short power-control probe show divergence?"""
    if result.status == "infeasible":
        return True
    if result.status == "converged":
        return False
    trace = result.trace
    return len(trace) > 60 and trace[-1] > trace[-51] * 1.001


def initial_routes(scenario: Scenario, gains: LinkGainMatrix,
                   sessions: SessionSet, p_init: np.ndarray, *,
                   repair_rounds: int = 8,
                   probe_iterations: int = 1500) -> RouteSet:
    """Route assignment for the initialization phase.

    Sessions are routed over the skeleton digraph with the target-operated
    energy-per-bit costs, and the resulting active link set is probed with a
    bounded power-control run. When the probe diverges, the weakest link
    among the fastest-growing nodes is banned, the skeleton is rebuilt and
    the sessions rerouted, up to ``repair_rounds`` times. The last candidate
    is returned even if no repair succeeded; the subsequent full
    power-control run then reports infeasibility honestly.
    """
    p_init = np.asarray(p_init, dtype=float)
    table = build_routing_table(gains, p_init)
    sir = estimated_sir_matrix(table, scenario.spreading_gain,
                               scenario.noise_power)
    base_costs = initial_route_costs(scenario, gains, p_init)

    forbidden = np.zeros_like(sir, dtype=bool)
    routes = None
    for _ in range(repair_rounds + 1):
        allowed = _initial_skeleton(sir, forbidden)
        costs = np.where(allowed, base_costs, np.inf)
        np.fill_diagonal(costs, np.inf)
        try:
            candidate = assign_routes(sessions, costs)
        except UnreachableSessionError:
            if routes is None:
                raise
            break
        routes = candidate
        probe = pc_iterate(
            p_init, routes.active_links, gains, scenario.spreading_gain,
            scenario.noise_power, scenario.target_sir, tol=scenario.pc_tol,
            max_iter=probe_iterations, power_cap=scenario.power_cap,
        )
        if not _probe_diverging(probe):
            break
        # ban the weakest link among the fastest-growing transmitters
        core = np.argsort(probe.powers)[::-1][:max(3, scenario.n_nodes // 12)]
        worst = None
        for i in core:
            for j in routes.active_links.outgoing.get(int(i), ()):
                if worst is None or sir[i, j] < worst[0]:
                    worst = (float(sir[i, j]), int(i), int(j))
        if worst is None:
            break
        forbidden[worst[1], worst[2]] = True
    return routes


def routes_to_csv(routes: RouteSet, path) -> None:
    from .csvio import write_csv

    write_csv(path, ("session", "hop", "node"), routes.rows())
