"""Fixed-point transmit power solvers.

The per-node update T_i(p) is the smallest power letting the node's worst
outgoing active link reach the target SIR given everyone else's current
power. T is a standard interference function (positive, monotone, scalable),
so iterating p <- T(p) converges to the minimal feasible power vector under
any update schedule whenever the system is feasible; divergence is detected
by the power cap or the iteration budget.

The two-step variant alternates LMMSE filter optimization with the matching
power update, using the exact sequence cross-correlations.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .netmodel import LinkGainMatrix, SpreadingCodebook
from .phy import (
    FilterBank,
    _interference_covariance,
    lmmse_filter,
    received_powers,
)

STATUS_CONVERGED = "converged"
STATUS_INFEASIBLE = "infeasible"
STATUS_MAX_ITER = "max_iter"

_RESIDUAL_FLOOR = 1e-30


@dataclass(frozen=True)
class ActiveLinkSet:
    """Directed links used by the current routes, with per-node outgoing sets."""

    n_nodes: int
    links: tuple[tuple[int, int], ...]

    @classmethod
    def from_links(cls, n_nodes: int, links) -> "ActiveLinkSet":
        unique = sorted(set((int(i), int(j)) for i, j in links))
        for i, j in unique:
            if i == j:
                raise ValueError(f"self loop ({i}, {j}) in active link set")
            if not (0 <= i < n_nodes and 0 <= j < n_nodes):
                raise ValueError(f"link ({i}, {j}) outside node range")
        return cls(n_nodes=n_nodes, links=tuple(unique))

    @cached_property
    def outgoing(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for i, j in self.links:
            out.setdefault(i, []).append(j)
        return {i: tuple(js) for i, js in out.items()}

    @cached_property
    def transmitters(self) -> tuple[int, ...]:
        return tuple(sorted(self.outgoing))

    @cached_property
    def link_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.links:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
        arr = np.asarray(self.links, dtype=int)
        return arr[:, 0], arr[:, 1]


@dataclass(frozen=True)
class PcResult:
    """Outcome of a power-control run.

    ``trace`` holds the total transmitted power of every iterate, starting
    from the initial vector.
    """

    status: str
    powers: np.ndarray
    iterations: int
    trace: np.ndarray

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED


def power_targets(p: np.ndarray, active: ActiveLinkSet, gains: LinkGainMatrix,
                  spreading_gain: int, noise: float,
                  target_sir: float) -> np.ndarray:
    """T_i(p) for every node; zero for nodes with no outgoing active link.

    T_i = max over outgoing links (i, j) of
    target_sir * ( (1/L) sum_{k != i,j} h(k,j) P_k + noise ) / h(i,j).
    """
    i_idx, j_idx = active.link_arrays
    targets = np.zeros(active.n_nodes)
    if i_idx.size == 0:
        return targets
    s = received_powers(gains, p)
    g = gains.gains[i_idx, j_idx]
    interference = (s[j_idx] - g * p[i_idx]) / spreading_gain + noise
    required = target_sir * interference / g
    np.maximum.at(targets, i_idx, required)
    return targets


def interference_target(i: int, p: np.ndarray, active: ActiveLinkSet,
                        gains: LinkGainMatrix, spreading_gain: int,
                        noise: float, target_sir: float) -> float:
    """T_i(p) for one node; the node must have outgoing active links."""
    if i not in active.outgoing:
        raise ValueError(f"node {i} has no outgoing active links")
    return float(power_targets(p, active, gains, spreading_gain, noise,
                               target_sir)[i])


def _mud_targets(p: np.ndarray, active: ActiveLinkSet, gains: LinkGainMatrix,
                 codebook: SpreadingCodebook, noise: float, target_sir: float,
                 filters: dict[tuple[int, int], np.ndarray]) -> np.ndarray:
    """Per-node power update for given receiver filters (worst outgoing link).

    Per link: target_sir * ( sum_{k != i,j} P_k h(k,j) (c's_k)^2
    + noise c'c ) / ( h(i,j) (c's_i)^2 ).
    """
    g = gains.gains
    seqs = codebook.sequences
    targets = np.zeros(active.n_nodes)
    for (i, j) in active.links:
        c = filters[(i, j)]
        x = seqs @ c
        weights = p * g[:, j] * x * x
        weights[i] = 0.0
        weights[j] = 0.0
        num = float(np.sum(weights)) + noise * float(c @ c)
        required = target_sir * num / (g[i, j] * x[i] * x[i])
        if required > targets[i]:
            targets[i] = required
    return targets


def _residual(new: np.ndarray, ref: np.ndarray) -> float:
    return float(np.max(np.abs(new - ref) / np.maximum(ref, _RESIDUAL_FLOOR)))


def pc_iterate(p0: np.ndarray, active: ActiveLinkSet, gains: LinkGainMatrix,
               spreading_gain: int, noise: float, target_sir: float, *,
               tol: float = 1e-6, max_iter: int = 10_000,
               power_cap: float = 1.0,
               schedule: str = "synchronous") -> PcResult:
    """Iterate the matched-filter power update until the residual test.

    Converged means every node's update residual |P_i - T_i(p)| / max(P_i, eps)
    is at most ``tol`` at the returned vector. Any power exceeding
    ``power_cap`` stops the run as infeasible; running out of iterations
    yields status "max_iter". The powers are returned either way for
    diagnosis. ``schedule`` is "synchronous" (all nodes update from the
    previous iterate) or "async-sweep" (in-place Gauss-Seidel sweep in node
    order); both terminate only once the synchronous residual passes.
    """
    if np.any(np.asarray(p0) < 0):
        raise ValueError("initial powers must be nonnegative")
    if schedule not in ("synchronous", "async-sweep"):
        raise ValueError(f"unknown schedule {schedule!r}")
    p = np.array(p0, dtype=float)
    # nodes outside the transmitter set hold zero power throughout
    mask = np.zeros(active.n_nodes, dtype=bool)
    mask[list(active.transmitters)] = True
    p[~mask] = 0.0
    totals = [float(p.sum())]

    def finish(status, powers, iterations):
        powers = powers.copy()
        powers.setflags(write=False)
        return PcResult(status, powers, iterations, np.asarray(totals))

    if np.any(p > power_cap):
        return finish(STATUS_INFEASIBLE, p, 0)
    g = gains.gains
    for iteration in range(1, max_iter + 1):
        if schedule == "synchronous":
            t = power_targets(p, active, gains, spreading_gain, noise, target_sir)
            if _residual(t, p) <= tol:
                return finish(STATUS_CONVERGED, p, iteration)
            p = t
        else:
            p_prev = p.copy()
            s = received_powers(gains, p)
            for i in active.transmitters:
                best = 0.0
                for j in active.outgoing[i]:
                    interference = (s[j] - g[i, j] * p[i]) / spreading_gain + noise
                    required = target_sir * interference / g[i, j]
                    if required > best:
                        best = required
                delta = best - p[i]
                if delta != 0.0:
                    s = s + g[i, :] * delta
                    p[i] = best
            if _residual(p, p_prev) <= tol:
                t = power_targets(p, active, gains, spreading_gain, noise,
                                  target_sir)
                if _residual(t, p) <= tol:
                    return finish(STATUS_CONVERGED, p, iteration)
        totals.append(float(p.sum()))
        if np.any(p > power_cap):
            return finish(STATUS_INFEASIBLE, p, iteration)
    return finish(STATUS_MAX_ITER, p, max_iter)


def pc_mud_iterate(p0: np.ndarray, active: ActiveLinkSet,
                   gains: LinkGainMatrix, codebook: SpreadingCodebook,
                   noise: float, target_sir: float, *,
                   tol: float = 1e-6, max_iter: int = 10_000,
                   power_cap: float = 1.0,
                   filter_mode: str = "lmmse") -> tuple[PcResult, FilterBank]:
    """Alternate receiver-filter and power updates until the powers settle.

    Step 1 recomputes the per-link filters from the current powers (LMMSE,
    or the fixed matched filters when ``filter_mode="matched"``, which gives
    the exact-cross-correlation matched baseline). Step 2 applies the
    corresponding power update per worst outgoing link. The returned filter
    bank is the one computed at the returned power vector.
    """
    if np.any(np.asarray(p0) < 0):
        raise ValueError("initial powers must be nonnegative")
    if filter_mode not in ("lmmse", "matched"):
        raise ValueError(f"unknown filter_mode {filter_mode!r}")
    p = np.array(p0, dtype=float)
    mask = np.zeros(active.n_nodes, dtype=bool)
    mask[list(active.transmitters)] = True
    p[~mask] = 0.0
    totals = [float(p.sum())]
    if np.any(p > power_cap):
        frozen = p.copy()
        frozen.setflags(write=False)
        return (
            PcResult(STATUS_INFEASIBLE, frozen, 0, np.asarray(totals)),
            FilterBank({(i, j): codebook.sequences[i]
                        for (i, j) in active.links}),
        )

    matched = {(i, j): codebook.sequences[i] for (i, j) in active.links}

    def filters_at(powers):
        if filter_mode == "matched":
            return matched
        out = {}
        for (i, j) in active.links:
            c = lmmse_filter(i, powers, gains, codebook, noise, j)
            if not np.any(c):
                # zero power zeroes the MMSE scale; the power update is
                # scale invariant, so keep the optimal direction instead
                cov = _interference_covariance(i, powers, gains, codebook,
                                               noise, j)
                c = np.linalg.solve(cov, codebook.sequences[i])
            out[(i, j)] = c
        return out

    filters = filters_at(p)
    for iteration in range(1, max_iter + 1):
        t = _mud_targets(p, active, gains, codebook, noise, target_sir, filters)
        if _residual(t, p) <= tol:
            powers = p.copy()
            powers.setflags(write=False)
            return (
                PcResult(STATUS_CONVERGED, powers, iteration, np.asarray(totals)),
                FilterBank(filters),
            )
        p = t
        totals.append(float(p.sum()))
        if np.any(p > power_cap):
            break
        filters = filters_at(p)
    status = STATUS_INFEASIBLE if np.any(p > power_cap) else STATUS_MAX_ITER
    powers = p.copy()
    powers.setflags(write=False)
    return (
        PcResult(status, powers, min(iteration, max_iter), np.asarray(totals)),
        FilterBank(filters),
    )


def pc_trace_to_csv(result: PcResult, path) -> None:
    from .csvio import write_csv

    rows = [(k, float(total)) for k, total in enumerate(result.trace)]
    write_csv(path, ("iteration", "total_power_W"), rows)
