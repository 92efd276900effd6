"""Reproduction harness: named experiments, file artifacts and the manifest.

Every experiment writes CSV artifacts plus a ``manifest.json`` that echoes
the full configuration, seeds and library versions; re-running from the
manifest alone reproduces every data file byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
import os
import platform
from dataclasses import dataclass

import numpy as np

from . import __version__
from .crosslayer import (
    STATUS_LOCAL_MIN,
    initial_powers,
    joint_optimize,
    multi_start,
    network_energy_per_bit,
    node_powers_to_csv,
    trace_to_csv,
)
from .csvio import read_csv, write_csv
from .errors import ConfigError, MissingArtifactError
from .fairness import effective_node_powers, optimize_mixture, select_candidates
from .netmodel import (
    Network,
    Scenario,
    build_network,
    compute_link_gains,
    generate_sessions,
    generate_spreading_codebook,
    generate_topology,
    sessions_to_csv,
    topology_to_csv,
)
from .powercontrol import pc_iterate, pc_mud_iterate
from .routing import (
    build_routing_table,
    estimated_sir_matrix,
    initial_routes,
    routes_to_csv,
)
from .seeds import derive_seed

EXPERIMENT_KINDS = ("run", "multistart", "fairness", "capacity", "sweep")

# Capacity-search seed streams (folded after the experiment seed).
_CAP_POSITION_STREAM = 1
_CAP_SESSION_STREAM = 2
_CAP_CODEBOOK_STREAM = 3
_CAP_POWER_STREAM = 4

STATUS_OK = "ok"
STATUS_INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario
    kind: str
    out_dir: str
    trials: int = 100
    seed: int | None = None
    phase_budget: int | None = None
    fairness_threshold: float = 0.10
    feasibility_target: float = 0.95
    capacity_spreading_gain: int | None = None
    n_min: int = 40
    n_max: int = 65
    n_step: int = 5
    capacity_use_joint: bool = False
    sweep_nodes: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind: {self.kind!r}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not (0.0 < self.feasibility_target <= 1.0):
            raise ConfigError("feasibility_target must be in (0, 1]")
        if self.phase_budget is not None and self.phase_budget < 1:
            raise ConfigError("phase_budget must be at least 1")

    @property
    def effective_seed(self) -> int:
        return self.scenario.master_seed if self.seed is None else self.seed

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["scenario"] = self.scenario.to_dict()
        if d["sweep_nodes"] is not None:
            d["sweep_nodes"] = list(d["sweep_nodes"])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown experiment key: {key!r}")
        data = dict(data)
        if "scenario" not in data:
            raise ConfigError("experiment config needs a scenario")
        data["scenario"] = Scenario.from_dict(data["scenario"])
        if data.get("sweep_nodes") is not None:
            data["sweep_nodes"] = tuple(int(n) for n in data["sweep_nodes"])
        return cls(**data)


@dataclass(frozen=True)
class ExperimentResult:
    status: str
    out_dir: str
    artifacts: tuple[str, ...]
    extras: dict


@dataclass(frozen=True)
class CapacityResult:
    """Largest network size whose feasibility rate meets the target."""

    spreading_gain: int
    n_star: int | None
    n_values: tuple[int, ...]
    rates: tuple[float, ...]
    trials: int


def throughput_gain(n_a: int, spreading_a: int, n_b: int,
                    spreading_b: int) -> float:
    """Normalized throughput of system A relative to system B:
    (n_a / spreading_a) / (n_b / spreading_b)."""
    for value in (n_a, spreading_a, n_b, spreading_b):
        if value < 1:
            raise ValueError("all arguments must be at least 1")
    return (n_a * spreading_b) / (spreading_a * n_b)


def _capacity_instance_feasible(template: Scenario, spreading_gain: int,
                                n_nodes: int, positions_all: np.ndarray,
                                seed: int, trial: int,
                                use_joint: bool) -> bool:
    """Judge one Monte Carlo instance: do the initial routes admit a
    converged power-control run at the initial powers?"""
    scenario = template.replace(n_nodes=n_nodes, spreading_gain=spreading_gain)
    positions = positions_all[:n_nodes].copy()
    from .netmodel import Topology

    positions.setflags(write=False)
    topology = Topology(positions=positions, area_side=scenario.area_side)
    gains = compute_link_gains(topology, scenario.path_loss_exp)
    sessions = generate_sessions(
        n_nodes, derive_seed(seed, _CAP_SESSION_STREAM, trial, n_nodes)
    )
    codebook = generate_spreading_codebook(
        n_nodes, spreading_gain,
        derive_seed(seed, _CAP_CODEBOOK_STREAM, trial, n_nodes),
    )
    if scenario.initial_power_mode == "random":
        rng = np.random.default_rng(
            derive_seed(seed, _CAP_POWER_STREAM, trial, n_nodes)
        )
        p0 = initial_powers(scenario, rng)
    else:
        p0 = initial_powers(scenario)
    if use_joint:
        solution = joint_optimize(scenario, topology, gains, sessions,
                                  codebook, p_init=p0)
        return solution.converged
    routes = initial_routes(scenario, gains, sessions, p0)
    if scenario.receiver == "lmmse":
        result, _ = pc_mud_iterate(
            p0, routes.active_links, gains, codebook, scenario.noise_power,
            scenario.target_sir, tol=scenario.pc_tol,
            max_iter=scenario.pc_max_iter, power_cap=scenario.power_cap,
        )
    else:
        result = pc_iterate(
            p0, routes.active_links, gains, scenario.spreading_gain,
            scenario.noise_power, scenario.target_sir, tol=scenario.pc_tol,
            max_iter=scenario.pc_max_iter, power_cap=scenario.power_cap,
        )
    return result.converged


def capacity_search(scenario_template: Scenario, spreading_gain: int,
                    trials: int, feasibility_target: float, seed: int, *,
                    n_min: int = 40, n_max: int = 65, n_step: int = 5,
                    use_joint: bool = False) -> CapacityResult:
    """Scan network sizes upward and find the largest one whose feasibility
    rate still meets the target.

    Each trial grows one fixed random deployment node by node (common random
    numbers): size N uses the first N of the trial's n_max positions, and a
    trial that has become infeasible at some size counts as infeasible at
    every larger size. This makes the per-size feasibility rates non-
    increasing by construction, so the scan can stop at the first size below
    the target. Sessions are redrawn per size since each added node also
    adds a traffic session.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not (0.0 < feasibility_target <= 1.0):
        raise ValueError("feasibility_target must be in (0, 1]")
    if n_min < 2:
        raise ValueError("n_min must be at least 2")

    positions = []
    for trial in range(trials):
        rng = np.random.default_rng(
            derive_seed(seed, _CAP_POSITION_STREAM, trial)
        )
        positions.append(
            rng.uniform(0.0, scenario_template.area_side, size=(n_max, 2))
        )

    alive = np.ones(trials, dtype=bool)
    n_values: list[int] = []
    rates: list[float] = []
    n_star: int | None = None
    for n_nodes in range(n_min, n_max + 1, n_step):
        for trial in range(trials):
            if not alive[trial]:
                continue
            alive[trial] = _capacity_instance_feasible(
                scenario_template, spreading_gain, n_nodes, positions[trial],
                seed, trial, use_joint,
            )
        rate = float(np.mean(alive))
        n_values.append(n_nodes)
        rates.append(rate)
        if rate >= feasibility_target:
            n_star = n_nodes
        else:
            break
    return CapacityResult(
        spreading_gain=spreading_gain, n_star=n_star,
        n_values=tuple(n_values), rates=tuple(rates), trials=trials,
    )


def _write_manifest(config: ExperimentConfig, status: str, extras: dict,
                    artifacts: list[str]) -> None:
    manifest = {
        "config": config.to_dict(),
        "status": status,
        "extras": extras,
        "artifacts": sorted(artifacts),
        "versions": {
            "adhocnet": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }
    path = os.path.join(config.out_dir, "manifest.json")
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def config_from_manifest(path) -> ExperimentConfig:
    """Rebuild the experiment configuration recorded in a manifest."""
    try:
        with open(path) as f:
            manifest = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"manifest not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest is not valid JSON: {exc}") from exc
    if "config" not in manifest:
        raise ConfigError("manifest lacks a config section")
    return ExperimentConfig.from_dict(manifest["config"])


def _export_solution(net: Network, solution, out_dir: str,
                     prefix: str = "") -> list[str]:
    scenario = net.scenario
    names = []

    def path_of(name):
        names.append(prefix + name)
        return os.path.join(out_dir, prefix + name)

    trace_to_csv(solution, path_of("trace.csv"))
    node_powers_to_csv(solution, net.topology, path_of("node_powers.csv"))
    routes_to_csv(solution.routes, path_of("routes.csv"))
    table = build_routing_table(net.gains, solution.powers)
    sir = estimated_sir_matrix(table, scenario.spreading_gain,
                               scenario.noise_power)
    header = ("node",) + tuple(f"to_{j}" for j in range(scenario.n_nodes))
    rows = [(i,) + tuple(float(v) for v in sir[i]) for i in range(scenario.n_nodes)]
    write_csv(os.path.join(out_dir, prefix + "sir_matrix.csv"), header, rows)
    names.append(prefix + "sir_matrix.csv")
    return names


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute the configured experiment and write its artifacts."""
    os.makedirs(config.out_dir, exist_ok=True)
    scenario = config.scenario
    if config.seed is not None:
        scenario = scenario.replace(master_seed=config.seed)
    artifacts: list[str] = []
    extras: dict = {}
    status = STATUS_OK

    if config.kind == "run":
        net = build_network(scenario)
        topology_to_csv(net.topology, os.path.join(config.out_dir, "topology.csv"))
        sessions_to_csv(net.sessions, os.path.join(config.out_dir, "sessions.csv"))
        artifacts += ["topology.csv", "sessions.csv"]
        solution = joint_optimize(scenario, net.topology, net.gains,
                                  net.sessions, net.codebook,
                                  phase_budget=config.phase_budget)
        if solution.converged:
            artifacts += _export_solution(net, solution, config.out_dir)
            extras["total_power_W"] = solution.total_power
            extras["energy_per_bit_J"] = solution.energy_per_bit
            extras["initial_energy_per_bit_J"] = solution.initial_energy_per_bit
            extras["phases"] = len(solution.trace)
        else:
            status = STATUS_INFEASIBLE
            extras["pc_status"] = solution.pc_diagnostics.status

    elif config.kind == "multistart":
        result = multi_start(scenario, config.trials, config.effective_seed)
        rows = [
            (t.trial, t.status, t.total_power, t.energy_per_bit)
            for t in result.trials
        ]
        write_csv(os.path.join(config.out_dir, "trials.csv"),
                  ("trial", "status", "total_power_W", "energy_per_bit_J"),
                  rows)
        artifacts.append("trials.csv")
        if result.best is None:
            status = STATUS_INFEASIBLE
        else:
            net = build_network(scenario)
            artifacts += _export_solution(net, result.best, config.out_dir,
                                          prefix="best_")
            extras["best_total_power_W"] = result.best.total_power
            extras["best_energy_per_bit_J"] = result.best.energy_per_bit
            extras["initial_energy_per_bit_J"] = result.best.initial_energy_per_bit

    elif config.kind == "fairness":
        result = multi_start(scenario, config.trials, config.effective_seed)
        if result.best is None:
            status = STATUS_INFEASIBLE
        else:
            candidates = select_candidates(result.trials,
                                           config.fairness_threshold)
            weights = optimize_mixture(candidates)
            mixed = effective_node_powers(candidates, weights)
            best = min(
                (c for c in candidates.candidates),
                key=lambda c: c.total_power,
            )
            write_csv(
                os.path.join(config.out_dir, "candidates.csv"),
                ("candidate", "trial", "total_power_W"),
                [(k, c.trial, c.total_power)
                 for k, c in enumerate(candidates.candidates)],
            )
            write_csv(
                os.path.join(config.out_dir, "candidate_powers.csv"),
                ("candidate", "node", "power_W"),
                [(k, i, float(pw))
                 for k, c in enumerate(candidates.candidates)
                 for i, pw in enumerate(c.powers)],
            )
            write_csv(
                os.path.join(config.out_dir, "weights.csv"),
                ("candidate", "weight"),
                [(k, float(w)) for k, w in enumerate(weights.w)],
            )
            write_csv(
                os.path.join(config.out_dir, "fairness_powers.csv"),
                ("node", "power_min_energy_W", "power_mixture_W"),
                [(i, float(a), float(b))
                 for i, (a, b) in enumerate(zip(best.powers, mixed))],
            )
            artifacts += ["candidates.csv", "candidate_powers.csv",
                          "weights.csv", "fairness_powers.csv"]
            extras["n_candidates"] = len(candidates)
            extras["power_target_W"] = candidates.power_target
            extras["variance_min_energy"] = float(np.var(best.powers))
            extras["variance_mixture"] = float(np.var(mixed))

    elif config.kind == "capacity":
        spreading = config.capacity_spreading_gain or scenario.spreading_gain
        result = capacity_search(
            scenario, spreading, config.trials, config.feasibility_target,
            config.effective_seed, n_min=config.n_min, n_max=config.n_max,
            n_step=config.n_step, use_joint=config.capacity_use_joint,
        )
        write_csv(
            os.path.join(config.out_dir, "capacity.csv"),
            ("n_nodes", "feasibility_rate", "trials"),
            [(n, r, config.trials)
             for n, r in zip(result.n_values, result.rates)],
        )
        artifacts.append("capacity.csv")
        extras["spreading_gain"] = result.spreading_gain
        extras["n_star"] = result.n_star
        if result.n_star is None:
            status = STATUS_INFEASIBLE

    elif config.kind == "sweep":
        nodes = config.sweep_nodes or tuple(
            range(config.n_min, config.n_max + 1, config.n_step)
        )
        rows = []
        for n_nodes in nodes:
            sc = scenario.replace(n_nodes=n_nodes)
            net = build_network(sc)
            solution = joint_optimize(sc, net.topology, net.gains,
                                      net.sessions, net.codebook,
                                      phase_budget=config.phase_budget)
            rows.append((n_nodes, solution.status, solution.total_power,
                         solution.energy_per_bit))
        write_csv(os.path.join(config.out_dir, "sweep.csv"),
                  ("n_nodes", "status", "total_power_W", "energy_per_bit_J"),
                  rows)
        artifacts.append("sweep.csv")

    _write_manifest(config, status, extras, artifacts)
    artifacts.append("manifest.json")
    return ExperimentResult(status=status, out_dir=config.out_dir,
                            artifacts=tuple(sorted(artifacts)), extras=extras)


# Plot-data emission: artifact name -> (required columns of the source file).
_PLOT_SOURCES = {
    "trace.csv": ("plot_total_power_vs_phase.csv", "plot_energy_vs_phase.csv"),
    "best_trace.csv": ("plot_total_power_vs_phase.csv",
                       "plot_energy_vs_phase.csv"),
    "node_powers.csv": ("plot_power_vs_node.csv",),
    "best_node_powers.csv": ("plot_power_vs_node.csv",),
    "trials.csv": ("plot_trial_power_spread.csv",),
    "fairness_powers.csv": ("plot_fairness_before_after.csv",),
    "capacity.csv": ("plot_feasibility_vs_nodes.csv",),
}


def emit_plot_data(artifact_dir, out_subdir: str = "plots") -> list[str]:
    """Project experiment artifacts onto plot-ready two/three-column files.

    Reads the manifest to learn which artifacts the experiment produced and
    emits the corresponding plot files into ``artifact_dir/out_subdir``.
    Raises MissingArtifactError when a manifest-listed artifact is absent.
    """
    manifest_path = os.path.join(artifact_dir, "manifest.json")
    if not os.path.exists(manifest_path):
        raise MissingArtifactError(f"missing artifact: {manifest_path}")
    with open(manifest_path) as f:
        manifest = json.load(f)
    listed = manifest.get("artifacts", [])
    out_dir = os.path.join(artifact_dir, out_subdir)
    os.makedirs(out_dir, exist_ok=True)
    emitted = []

    def source(name):
        path = os.path.join(artifact_dir, name)
        if not os.path.exists(path):
            raise MissingArtifactError(f"missing artifact: {path}")
        return read_csv(path)

    for name in listed:
        if name not in _PLOT_SOURCES:
            continue
        header, rows = source(name)
        if name in ("trace.csv", "best_trace.csv"):
            write_csv(os.path.join(out_dir, "plot_total_power_vs_phase.csv"),
                      ("phase", "total_power_W"),
                      [(r[0], r[2]) for r in rows])
            write_csv(os.path.join(out_dir, "plot_energy_vs_phase.csv"),
                      ("phase", "energy_per_bit_J"),
                      [(r[0], r[3]) for r in rows])
            emitted += ["plot_total_power_vs_phase.csv",
                        "plot_energy_vs_phase.csv"]
        elif name in ("node_powers.csv", "best_node_powers.csv"):
            write_csv(os.path.join(out_dir, "plot_power_vs_node.csv"),
                      ("node", "power_W"),
                      [(r[0], r[3]) for r in rows])
            emitted.append("plot_power_vs_node.csv")
        elif name == "trials.csv":
            totals = sorted(float(r[2]) for r in rows)
            write_csv(os.path.join(out_dir, "plot_trial_power_spread.csv"),
                      ("rank", "total_power_W"),
                      [(k, v) for k, v in enumerate(totals)])
            emitted.append("plot_trial_power_spread.csv")
        elif name == "fairness_powers.csv":
            write_csv(os.path.join(out_dir, "plot_fairness_before_after.csv"),
                      ("node", "power_before_W", "power_after_W"),
                      [(r[0], r[1], r[2]) for r in rows])
            emitted.append("plot_fairness_before_after.csv")
        elif name == "capacity.csv":
            write_csv(os.path.join(out_dir, "plot_feasibility_vs_nodes.csv"),
                      ("n_nodes", "feasibility_rate"),
                      [(r[0], r[1]) for r in rows])
            emitted.append("plot_feasibility_vs_nodes.csv")
    return sorted(set(emitted))
