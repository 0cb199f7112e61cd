"""Free energy, Q-values and spin statistics from annealed reads."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonian import EffectiveHamiltonian, HamiltonianBatch, build_hamiltonian_batch
from .network import QbmNetwork, _check_visible
from .sampler import AnnealSchedule, ReadSet, sample_batch


class EmptyReadSetError(ValueError):
    pass


@dataclass
class FreeEnergyEstimate:
    mean_energy: float
    entropy_term: float
    free_energy: float
    mean_spin: np.ndarray
    mean_pair: np.ndarray


@dataclass
class BatchEstimate:
    """Per-query free energies with the spin statistics the weight update needs."""

    free_energy: np.ndarray
    mean_energy: np.ndarray
    entropy_term: np.ndarray
    mean_spin: np.ndarray
    mean_pair: np.ndarray

    @property
    def q_values(self) -> np.ndarray:
        return -self.free_energy


def _entropy_term(reads: np.ndarray, weights: np.ndarray, beta: float) -> float:
    """``(1/beta) * sum_c P(c) ln P(c)`` over distinct configurations (always <= 0)."""
    _, inverse = np.unique(reads, axis=0, return_inverse=True)
    mass = np.bincount(inverse.reshape(-1), weights=weights)
    p = mass[mass > 0] / mass.sum()
    if p.size == 1:
        return 0.0
    return float(np.sum(p * np.log(p)) / beta)


def _spin_stats(spins: np.ndarray, weights: np.ndarray, n_hidden: int, n_replicas: int,
                hidden_edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Replica-averaged <s_h> and within-replica <s_h s_h'> for spins ``(..., reads, n_spins)``."""
    s = spins.astype(np.float64).reshape(*spins.shape[:-1], n_replicas, n_hidden)
    w = weights / weights.sum(axis=-1, keepdims=True)
    mean_spin = np.einsum("...r,...rkh->...h", w, s) / n_replicas
    pair = s[..., hidden_edges[:, 0]] * s[..., hidden_edges[:, 1]]
    mean_pair = np.einsum("...r,...rke->...e", w, pair) / n_replicas
    return mean_spin, mean_pair


def estimate_free_energy(h: EffectiveHamiltonian, reads: ReadSet, beta: float) -> FreeEnergyEstimate:
    """Free energy of ``h`` from the empirical distribution of ``reads``.

    ``reads.weights``, when present, are used as (unnormalized) probability
    masses instead of counting each read once; this lets an exhaustive,
    exactly weighted read set reproduce ``-ln(Z) / beta``.
    """
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if len(reads) == 0:
        raise EmptyReadSetError("cannot estimate a free energy from zero reads")
    weights = np.ones(len(reads)) if reads.weights is None else np.asarray(reads.weights, float)
    p = weights / weights.sum()
    mean_energy = float(p @ reads.energies)
    entropy_term = _entropy_term(reads.reads, weights, beta)
    mean_spin, mean_pair = _spin_stats(reads.reads, weights, h.n_hidden, h.n_replicas, h.hidden_edges)
    return FreeEnergyEstimate(mean_energy, entropy_term, mean_energy + entropy_term, mean_spin, mean_pair)


def estimate_batch(batch: HamiltonianBatch, spins: np.ndarray, energies: np.ndarray,
                   beta: float) -> BatchEstimate:
    n_queries, n_reads, _ = spins.shape
    ones = np.ones(n_reads)
    mean_energy = energies.mean(axis=1)
    entropy = np.array([_entropy_term(spins[q], ones, beta) for q in range(n_queries)])
    mean_spin, mean_pair = _spin_stats(spins, np.broadcast_to(ones, (n_queries, n_reads)),
                                       batch.n_hidden, batch.n_replicas, batch.hidden_edges)
    return BatchEstimate(mean_energy + entropy, mean_energy, entropy, mean_spin, mean_pair)


@dataclass(frozen=True)
class SamplerParams:
    """Everything needed to turn a network and a clamp into a free energy."""

    schedule: AnnealSchedule = AnnealSchedule()
    n_reads: int = 10
    replicas: int = 1
    coupling_mode: str = "literal"
    backend: str | None = None

    @property
    def beta(self) -> float:
        return self.schedule.beta


def evaluate_visibles(net: QbmNetwork, visibles, params: SamplerParams, seeds) -> BatchEstimate:
    """Free energies for each row of clamped visible units (state then action)."""
    batch = build_hamiltonian_batch(net, visibles, params.replicas, params.schedule.gamma_final,
                                    params.beta, params.coupling_mode)
    spins, energies = sample_batch(batch, params.schedule, params.n_reads, seeds, params.backend)
    return estimate_batch(batch, spins, energies, params.beta)


def q_value(net: QbmNetwork, state, action, params: SamplerParams = SamplerParams(),
            seed: int = 0) -> float:
    """Q(s, a) = -F(s, a) from one annealing run."""
    state, action = _check_visible(net, state, action)
    est = evaluate_visibles(net, np.concatenate([state, action])[None, :], params, [seed])
    return float(est.q_values[0])
