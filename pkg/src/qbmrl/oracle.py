"""Brute-force Boltzmann statistics for small spin systems.

Enumerates all ``2**N`` configurations, so it refuses systems with more
than ``MAX_SPINS`` spins instead of approximating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .sampler import ReadSet

MAX_SPINS = 24
_CHUNK = 1 << 16


class OracleSizeError(ValueError):
    pass


def all_configurations(n_spins: int) -> np.ndarray:
    """Every +/-1 assignment, row ``c`` is the binary expansion of ``c`` (bit i -> spin i)."""
    codes = np.arange(2**n_spins, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(n_spins)) & 1
    return (2 * bits - 1).astype(np.int8)


def _check(h, beta: float) -> None:
    if h.n_spins > MAX_SPINS:
        raise OracleSizeError(f"{h.n_spins} spins exceeds the enumeration cap of {MAX_SPINS}")
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")


def _energies(h) -> np.ndarray:
    n = h.n_spins
    out = np.empty(2**n)
    for start in range(0, 2**n, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, 2**n), dtype=np.int64)
        spins = (2 * ((codes[:, None] >> np.arange(n)) & 1) - 1).astype(np.int8)
        out[start:start + codes.size] = h.energy(spins)
    return out


@dataclass
class ExactDistribution:
    beta: float
    configurations: np.ndarray
    energies: np.ndarray
    probabilities: np.ndarray
    log_z: float

    @property
    def free_energy(self) -> float:
        return -self.log_z / self.beta

    @property
    def mean_energy(self) -> float:
        return float(self.probabilities @ self.energies)

    def as_read_set(self) -> ReadSet:
        """Every configuration once, weighted by its exact probability."""
        return ReadSet(self.configurations, self.energies, self.probabilities)


def exact_distribution(h, beta: float) -> ExactDistribution:
    _check(h, beta)
    energies = _energies(h)
    log_w = -beta * energies
    log_z = float(logsumexp(log_w))
    probs = np.exp(log_w - log_z)
    return ExactDistribution(beta, all_configurations(h.n_spins), energies, probs, log_z)


def exact_free_energy(h, beta: float) -> float:
    """``-ln(sum_c exp(-beta H(c))) / beta`` by full enumeration."""
    _check(h, beta)
    return float(-logsumexp(-beta * _energies(h)) / beta)


@dataclass
class ExactExpectations:
    mean_spin: np.ndarray
    pair: dict[tuple[int, int], float]
    hidden_mean_spin: np.ndarray
    hidden_mean_pair: np.ndarray


def exact_expectations(h, beta: float) -> ExactExpectations:
    """Exact <s_i> per spin and <s_i s_j> per coupled pair.

    Also reports the replica-averaged hidden-node statistics in the same
    layout as the free-energy estimator.
    """
    dist = exact_distribution(h, beta)
    s = dist.configurations.astype(np.float64)
    p = dist.probabilities
    mean_spin = p @ s
    pair = {}
    for (i, j) in h.couplings:
        if i < j:
            pair[(i, j)] = float(p @ (s[:, i] * s[:, j]))
    r, nh = h.n_replicas, h.n_hidden
    per_replica = s.reshape(-1, r, nh)
    hidden_mean_spin = (p @ per_replica.reshape(len(p), -1)).reshape(r, nh).mean(axis=0)
    e = h.hidden_edges
    prod = per_replica[:, :, e[:, 0]] * per_replica[:, :, e[:, 1]]
    hidden_mean_pair = np.einsum("c,cke->e", p, prod) / r
    return ExactExpectations(mean_spin, pair, hidden_mean_spin, hidden_mean_pair)
