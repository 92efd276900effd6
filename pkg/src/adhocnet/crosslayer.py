"""Hierarchical joint power control and routing.

The loop alternates a converged power-control run with a route reassignment
on SIR-gated power costs. Every link admitted by the gate already meets the
SIR target at the pre-routing powers, so the next power-control run starts
from a feasible point and descends; total transmitted power is therefore
non-increasing across phase boundaries and the loop stops at a local
minimum once rerouting stops paying.

Energy per bit is recorded along the trace but is not monotone: right after
rerouting the powers are not yet re-optimized for the new routes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netmodel import (
    INIT_POWER_STREAM,
    LinkGainMatrix,
    Scenario,
    SessionSet,
    SpreadingCodebook,
    Topology,
)
from .phy import (
    FilterBank,
    energy_per_bit_link,
    lmmse_filter,
    lmmse_sir_matrix,
    sir_lmmse,
    sir_matched,
)
from .powercontrol import PcResult, pc_iterate, pc_mud_iterate
from .errors import UnreachableSessionError
from .routing import (
    RouteSet,
    assign_routes,
    build_link_costs,
    build_routing_table,
    initial_routes,
)
from .seeds import derive_seed

PHASE_POWER_CONTROL = "power_control"
PHASE_ROUTING = "routing"

STATUS_LOCAL_MIN = "local_min"
STATUS_INFEASIBLE_INIT = "infeasible_init"

# Stream index offset for per-trial power initializations in multi_start.
TRIAL_STREAM_BASE = 16


@dataclass(frozen=True)
class PhaseRecord:
    phase: str
    total_power: float
    energy_per_bit: float


@dataclass(frozen=True)
class JointSolution:
    """Converged powers, routes and filters with the full phase trace."""

    status: str
    powers: np.ndarray
    routes: RouteSet
    filters: FilterBank | None
    trace: tuple[PhaseRecord, ...]
    total_power: float
    energy_per_bit: float
    initial_total_power: float
    initial_energy_per_bit: float
    pc_diagnostics: PcResult | None = None

    @property
    def converged(self) -> bool:
        return self.status == STATUS_LOCAL_MIN


@dataclass(frozen=True)
class TrialSummary:
    trial: int
    status: str
    total_power: float
    energy_per_bit: float
    powers: np.ndarray
    routes: RouteSet


@dataclass(frozen=True)
class MultiStartResult:
    best: JointSolution | None
    trials: tuple[TrialSummary, ...]

    @property
    def all_infeasible(self) -> bool:
        return self.best is None


def initial_powers(scenario: Scenario, rng: np.random.Generator | None = None) -> np.ndarray:
    """Initial transmit powers per the scenario's initialization mode.

    Random mode draws log-uniformly over the configured range; the stream
    defaults to the master seed's dedicated initialization stream.
    """
    n = scenario.n_nodes
    if scenario.initial_power_mode == "equal":
        return np.full(n, scenario.initial_power)
    if rng is None:
        rng = np.random.default_rng(
            derive_seed(scenario.master_seed, INIT_POWER_STREAM)
        )
    lo, hi = scenario.power_init_range()
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size=n))


def network_energy_per_bit(routes: RouteSet, p: np.ndarray, scenario: Scenario,
                           gains: LinkGainMatrix,
                           codebook: SpreadingCodebook | None = None,
                           filters: FilterBank | None = None) -> float:
    """Total energy per delivered bit, summed over sessions and route links.

    Each link's energy uses the SIR model matching the scenario's receiver;
    for the LMMSE receiver, links missing from ``filters`` get a fresh
    filter computed at the current powers.
    """
    total = 0.0
    if scenario.receiver == "lmmse":
        if codebook is None:
            raise ValueError("LMMSE energy needs the spreading codebook")
        cache = dict(filters.filters) if filters is not None else {}
    for path in routes.paths:
        for link in zip(path[:-1], path[1:]):
            if scenario.receiver == "matched":
                sir = sir_matched(link, p, gains, scenario.spreading_gain,
                                  scenario.noise_power)
            else:
                if link not in cache:
                    cache[link] = lmmse_filter(link[0], p, gains, codebook,
                                               scenario.noise_power, link[1])
                sir = sir_lmmse(link, p, FilterBank(cache), gains, codebook,
                                scenario.noise_power)
            total += energy_per_bit_link(link, p, sir, scenario.bit_rate,
                                         scenario.packet_bits)
    return total


def _run_power_control(scenario: Scenario, p: np.ndarray, routes: RouteSet,
                       gains: LinkGainMatrix,
                       codebook: SpreadingCodebook) -> tuple[PcResult, FilterBank | None]:
    active = routes.active_links
    if scenario.receiver == "lmmse":
        result, filters = pc_mud_iterate(
            p, active, gains, codebook, scenario.noise_power,
            scenario.target_sir, tol=scenario.pc_tol,
            max_iter=scenario.pc_max_iter, power_cap=scenario.power_cap,
        )
        return result, filters
    result = pc_iterate(
        p, active, gains, scenario.spreading_gain, scenario.noise_power,
        scenario.target_sir, tol=scenario.pc_tol,
        max_iter=scenario.pc_max_iter, power_cap=scenario.power_cap,
    )
    return result, None


def joint_optimize(scenario: Scenario, topology: Topology,
                   gains: LinkGainMatrix, sessions: SessionSet,
                   codebook: SpreadingCodebook,
                   p_init: np.ndarray | None = None,
                   phase_budget: int | None = None) -> JointSolution:
    """Alternate converged power control with route reassignment.

    The route gate admits links whose estimated SIR reaches the target up to
    the power-control tolerance jitter, and a rerouting step is accepted
    only when the re-optimized powers do not regress the total, so the
    recorded trace is non-increasing by construction. Natural termination:
    routes unchanged, no non-regressing step available, or relative
    improvement below the scenario threshold; a phase cap bounds
    pathological cases. With ``phase_budget`` set, exactly that many phases
    are recorded instead (power control first, alternating; flat once the
    loop has stalled), which reproduces fixed-length published traces.

    An initial power-control failure yields status "infeasible_init" with
    the failing PcResult attached.
    """
    if p_init is None:
        p_init = initial_powers(scenario)
    p_init = np.asarray(p_init, dtype=float)

    routes = initial_routes(scenario, gains, sessions, p_init)
    init_total = float(p_init.sum())
    init_energy = network_energy_per_bit(routes, p_init, scenario, gains,
                                         codebook)

    cap = phase_budget if phase_budget is not None else scenario.phase_cap
    budget_mode = phase_budget is not None
    # converged links sit at the target within the solver tolerance, so the
    # gate must not reject them over that jitter
    gate_sir = scenario.target_sir * (1.0 - 10.0 * scenario.pc_tol)
    records: list[PhaseRecord] = []

    def record(phase, p, routes, filters):
        energy = network_energy_per_bit(routes, p, scenario, gains, codebook,
                                        filters)
        records.append(PhaseRecord(phase, float(p.sum()), energy))

    pc, filters = _run_power_control(scenario, p_init, routes, gains, codebook)
    if not pc.converged:
        frozen = np.array(p_init)
        frozen.setflags(write=False)
        return JointSolution(
            status=STATUS_INFEASIBLE_INIT, powers=frozen, routes=routes,
            filters=None, trace=(), total_power=init_total,
            energy_per_bit=init_energy, initial_total_power=init_total,
            initial_energy_per_bit=init_energy, pc_diagnostics=pc,
        )
    p = pc.powers
    record(PHASE_POWER_CONTROL, p, routes, filters)
    prev_pc_total = records[-1].total_power
    stalled = False

    while len(records) < cap:
        new_routes = routes
        if not stalled:
            table = build_routing_table(gains, p)
            # gate with the SIR the receiver in use actually achieves
            sir_matrix = None
            if scenario.receiver == "lmmse":
                sir_matrix = lmmse_sir_matrix(p, gains, codebook,
                                              scenario.noise_power)
            costs = build_link_costs(p, table, gate_sir,
                                     scenario.spreading_gain,
                                     scenario.noise_power,
                                     sir_matrix=sir_matrix)
            try:
                new_routes = assign_routes(sessions, costs)
            except UnreachableSessionError:
                # gate jitter disconnected the graph: no improving move exists
                new_routes = routes
        unchanged = new_routes.paths == routes.paths
        if unchanged:
            record(PHASE_ROUTING, p, routes, filters)
            if not budget_mode:
                break
            if len(records) >= cap:
                break
            record(PHASE_POWER_CONTROL, p, routes, filters)
            continue
        # tentatively re-optimize powers for the new routes; accept only
        # non-regressing steps so total power descends by construction
        new_pc, new_filters = _run_power_control(scenario, p, new_routes,
                                                 gains, codebook)
        if not new_pc.converged \
                or float(new_pc.powers.sum()) > prev_pc_total * (1.0 + 1e-12):
            stalled = True
            if not budget_mode:
                break
            continue
        record(PHASE_ROUTING, p, new_routes, filters)
        routes = new_routes
        if len(records) >= cap:
            break
        p = new_pc.powers
        filters = new_filters
        record(PHASE_POWER_CONTROL, p, routes, filters)
        total = records[-1].total_power
        improvement = (prev_pc_total - total) / prev_pc_total
        prev_pc_total = total
        if improvement < scenario.improvement_tol and not budget_mode:
            break

    return JointSolution(
        status=STATUS_LOCAL_MIN, powers=p, routes=routes, filters=filters,
        trace=tuple(records), total_power=records[-1].total_power,
        energy_per_bit=records[-1].energy_per_bit,
        initial_total_power=init_total, initial_energy_per_bit=init_energy,
    )


def multi_start(scenario: Scenario, trials: int,
                seed: int | None = None) -> MultiStartResult:
    """Repeat the joint loop from random power initializations.

    Each trial draws a log-uniform initial power vector from its own derived
    stream; the best (lowest total power) converged solution is returned
    together with per-trial summaries. The network itself (topology,
    sessions, codebook) is fixed by the scenario.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    from .netmodel import build_network

    if seed is None:
        seed = scenario.master_seed
    net = build_network(scenario)
    lo, hi = scenario.power_init_range()
    summaries = []
    best: JointSolution | None = None
    for trial in range(trials):
        rng = np.random.default_rng(derive_seed(seed, TRIAL_STREAM_BASE, trial))
        p_init = np.exp(rng.uniform(np.log(lo), np.log(hi), size=scenario.n_nodes))
        solution = joint_optimize(scenario, net.topology, net.gains,
                                  net.sessions, net.codebook, p_init=p_init)
        summaries.append(TrialSummary(
            trial=trial, status=solution.status,
            total_power=solution.total_power,
            energy_per_bit=solution.energy_per_bit,
            powers=solution.powers, routes=solution.routes,
        ))
        if solution.converged and (best is None
                                   or solution.total_power < best.total_power):
            best = solution
    return MultiStartResult(best=best, trials=tuple(summaries))


def network_metrics(solution: JointSolution,
                    scenario: Scenario) -> tuple[float, float, np.ndarray]:
    """(total transmitted power, network energy per bit, per-node powers)."""
    total = float(np.sum(solution.powers))
    return total, solution.energy_per_bit, solution.powers


def trace_to_csv(solution: JointSolution, path) -> None:
    from .csvio import write_csv

    rows = [
        (k, rec.phase, rec.total_power, rec.energy_per_bit)
        for k, rec in enumerate(solution.trace)
    ]
    write_csv(path, ("phase_index", "phase_kind", "total_power_W",
                     "energy_per_bit_J"), rows)


def node_powers_to_csv(solution: JointSolution, topology: Topology, path) -> None:
    from .csvio import write_csv

    rows = [
        (i, float(x), float(y), float(pw))
        for i, ((x, y), pw) in enumerate(zip(topology.positions,
                                             solution.powers))
    ]
    write_csv(path, ("node", "x_m", "y_m", "power_W"), rows)
