"""Physical-layer models.

Matched-filter SIR under the random-sequence 1/L cross-correlation model,
LMMSE receiver filters and their output SIR with the actual sequence
cross-correlations, and the retransmission-based link energy model.

The interference sums follow the worst-case assumption that every node
transmits at all times, so the interferers for a link (i, j) are all nodes
except the transmitter i and the receiver j. Note the deliberate modeling
split: the matched-filter SIR replaces squared cross-correlations by their
expectation 1/L, while the LMMSE expressions use the exact values; on random
codebooks the two matched-filter numbers therefore differ slightly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .netmodel import LinkGainMatrix, SpreadingCodebook

# Condition bound above which an LMMSE covariance solve is flagged.
CONDITION_WARN_THRESHOLD = 1e12


@dataclass(frozen=True)
class FilterBank:
    """Receiver filter per active directed link (transmitter, receiver)."""

    filters: dict[tuple[int, int], np.ndarray]

    @classmethod
    def matched(cls, codebook: SpreadingCodebook, links) -> "FilterBank":
        """Matched filters: each link uses its transmitter's own sequence."""
        return cls({(i, j): codebook.sequences[i] for (i, j) in links})

    def __getitem__(self, link):
        return self.filters[link]


def received_powers(gains: LinkGainMatrix, p: np.ndarray) -> np.ndarray:
    """Total received power at every node from all other transmitters.

    Entry j equals sum_k h(k, j) P_k over k != j; the zero diagonal of the
    gain matrix excludes each node's own transmission. This is the quantity
    a node can measure locally, and it equals the extended estimated
    interference of the routing layer for any incoming link.
    """
    return gains.gains.T @ p


def sir_matched(link, p: np.ndarray, gains: LinkGainMatrix, spreading_gain: int,
                noise: float) -> float:
    """Matched-filter SIR of a link under the 1/L interference model.

    SIR = h(i,j) P_i / ( (1/L) * sum_{k != i,j} h(k,j) P_k + noise ).
    """
    i, j = link
    if i == j:
        raise ValueError("link endpoints must differ")
    s = received_powers(gains, p)
    num = gains.gains[i, j] * p[i]
    denom = (s[j] - num) / spreading_gain + noise
    if denom == 0.0:
        return float("inf")
    return float(num / denom)


def _interference_covariance(i: int, p: np.ndarray, gains: LinkGainMatrix,
                             codebook: SpreadingCodebook, noise: float,
                             receiver_node: int) -> np.ndarray:
    """Interference-plus-noise covariance at the receiver, excluding the
    desired transmitter i and the receiver itself."""
    seqs = codebook.sequences
    weights = p * gains.gains[:, receiver_node]
    weights = weights.copy()
    weights[i] = 0.0
    weights[receiver_node] = 0.0
    cov = (seqs.T * weights) @ seqs
    cov[np.diag_indices_from(cov)] += noise
    return cov


def lmmse_filter(i: int, p: np.ndarray, gains: LinkGainMatrix,
                 codebook: SpreadingCodebook, noise: float,
                 receiver_node: int) -> np.ndarray:
    """LMMSE receiver filter for transmitter i at ``receiver_node``.

    c = sqrt(P_i) / (1 + P_i s_i' A^-1 s_i) * A^-1 s_i with A the
    interference-plus-noise covariance. The noise term keeps A positive
    definite for any load, so the solve cannot be singular; a very large
    condition bound is still reported as a warning.
    """
    cov = _interference_covariance(i, p, gains, codebook, noise, receiver_node)
    # lambda_max <= noise + total interference weight since sequences are unit norm
    cond_bound = float(np.trace(cov)) / noise
    if cond_bound > CONDITION_WARN_THRESHOLD:
        warnings.warn(
            f"LMMSE covariance condition bound {cond_bound:.3e} exceeds "
            f"{CONDITION_WARN_THRESHOLD:.1e}",
            RuntimeWarning,
            stacklevel=2,
        )
    s_i = codebook.sequences[i]
    base = np.linalg.solve(cov, s_i)
    scale = np.sqrt(p[i]) / (1.0 + p[i] * float(s_i @ base))
    return scale * base


def sir_lmmse(link, p: np.ndarray, filters: FilterBank, gains: LinkGainMatrix,
              codebook: SpreadingCodebook, noise: float) -> float:
    """Output SIR of the link's receiver filter with exact cross-correlations.

    SIR = h(i,j) P_i (c's_i)^2 /
          ( sum_{k != i,j} P_k h(k,j) (c's_k)^2 + noise * c'c ).
    """
    i, j = link
    if i == j:
        raise ValueError("link endpoints must differ")
    c = filters[link]
    x = codebook.sequences @ c
    weights = p * gains.gains[:, j] * x * x
    weights = weights.copy()
    weights[i] = 0.0
    weights[j] = 0.0
    num = gains.gains[i, j] * p[i] * x[i] * x[i]
    denom = float(np.sum(weights)) + noise * float(c @ c)
    if denom == 0.0:
        return float("inf")
    return float(num / denom)


def lmmse_sir_matrix(p: np.ndarray, gains: LinkGainMatrix,
                     codebook: SpreadingCodebook, noise: float) -> np.ndarray:
    """Achievable LMMSE output SIR for every potential link, diagonal zero.

    Entry (i, j) is the SIR the optimal filter would reach on link (i, j) at
    the current powers. Per receiver j the full received covariance
    B_j = sum_{k != j} P_k h(k,j) s_k s_k' + noise I is factorized once and
    each transmitter's covariance (which excludes its own term) is obtained
    by a rank-one downdate: with q_i = s_i' B_j^-1 s_i and c_i = P_i h(i,j),
    SIR(i, j) = c_i q_i / (1 - c_i q_i).
    """
    n = p.shape[0]
    seqs = codebook.sequences
    length = seqs.shape[1]
    out = np.zeros((n, n))
    eye = np.eye(length)
    for j in range(n):
        weights = p * gains.gains[:, j]
        weights = weights.copy()
        weights[j] = 0.0
        cov = (seqs.T * weights) @ seqs + noise * eye
        solved = np.linalg.solve(cov, seqs.T)  # (L, n)
        q = np.einsum("il,li->i", seqs, solved)
        c = p * gains.gains[:, j]
        with np.errstate(divide="ignore", invalid="ignore"):
            sir = c * q / (1.0 - c * q)
        sir[~np.isfinite(sir)] = np.inf
        sir[c == 0.0] = 0.0
        sir[j] = 0.0
        out[:, j] = sir
    return out


def efficiency(sir, packet_bits: int):
    """Packet success probability f = (1 - exp(-sir/2))^M.

    The underlying bit error model is noncoherent FSK; retransmission until
    success makes 1/f the expected number of packet transmissions. Accepts
    scalars or arrays.
    """
    return (1.0 - np.exp(-0.5 * np.asarray(sir, dtype=float))) ** packet_bits


def energy_per_bit_link(link, p: np.ndarray, sir: float, bit_rate: float,
                        packet_bits: int) -> float:
    """Transmit energy per correctly delivered bit on one link.

    E_b = P_i / (bit_rate * f(sir)); infinite when the success probability
    is zero (the link cannot deliver).
    """
    if bit_rate <= 0:
        raise ValueError("bit_rate must be positive")
    i, _ = link
    f = float(efficiency(sir, packet_bits))
    if f == 0.0:
        return float("inf")
    return float(p[i] / (bit_rate * f))
