"""Simulated quantum annealing over an effective Hamiltonian.

Each read starts from uniformly random spins and runs ``num_sweeps`` full
heat-bath sweeps while the transverse field is lowered linearly from
``gamma_initial`` to ``gamma_final`` at fixed temperature. The inner loop
lives in the compiled ``_sqa_kernel`` extension when it is importable, and
in the numpy fallback ``_sqa_python`` otherwise. Set ``QBMRL_BACKEND=python``
to force the fallback.

Read ``i`` of a query seeded with ``seed`` draws from its own SplitMix64
stream seeded ``seed + i``, so results do not depend on the backend or on
how queries are batched.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _sqa_python
from .hamiltonian import EffectiveHamiltonian, HamiltonianBatch, transverse_coupling

try:
    from . import _sqa_kernel
except ImportError:  # extension not built
    _sqa_kernel = None

_BACKENDS = {"python": _sqa_python}
if _sqa_kernel is not None:
    _BACKENDS["cython"] = _sqa_kernel


def _default_backend() -> str:
    requested = os.environ.get("QBMRL_BACKEND", "").strip().lower()
    if requested:
        if requested not in _BACKENDS:
            raise ImportError(f"QBMRL_BACKEND={requested!r} is not available; have {sorted(_BACKENDS)}")
        return requested
    return "cython" if "cython" in _BACKENDS else "python"


BACKEND = _default_backend()


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


@dataclass(frozen=True)
class AnnealSchedule:
    num_sweeps: int = 1000
    gamma_initial: float = 20.0
    gamma_final: float = 0.01
    temperature: float = 1.0
    beta: float | None = None
    random_order: bool = False

    def __post_init__(self):
        if self.num_sweeps < 1:
            raise ValueError("num_sweeps must be >= 1")
        if not self.temperature > 0:
            raise ValueError("temperature must be > 0")
        if not self.gamma_initial >= self.gamma_final >= 0:
            raise ValueError("need gamma_initial >= gamma_final >= 0")
        if self.beta is None:
            object.__setattr__(self, "beta", 1.0 / self.temperature)
        elif not self.beta > 0:
            raise ValueError("beta must be > 0")

    def gammas(self) -> np.ndarray:
        """Transverse field used in each sweep (linear, non-increasing)."""
        if self.num_sweeps == 1:
            return np.array([self.gamma_final])
        return np.linspace(self.gamma_initial, self.gamma_final, self.num_sweeps)


@dataclass
class ReadSet:
    reads: np.ndarray
    energies: np.ndarray
    weights: np.ndarray | None = field(default=None)

    def __len__(self) -> int:
        return self.reads.shape[0]


def flip_probability(delta_e, temperature: float):
    """Heat-bath probability that a node takes +1 given ``E(-1) - E(+1)``."""
    if not temperature > 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    with np.errstate(over="ignore"):
        p = 1.0 / (1.0 + np.exp(-np.asarray(delta_e, dtype=np.float64) / temperature))
    return float(p) if np.ndim(p) == 0 else p


def _jperp_schedule(h, schedule: AnnealSchedule) -> np.ndarray:
    if h.n_replicas == 1:
        return np.zeros(schedule.num_sweeps)
    jp = np.array([transverse_coupling(g, h.beta, h.n_replicas, h.coupling_mode)
                   for g in schedule.gammas()])
    if not np.all(np.isfinite(jp)):
        raise ValueError("inter-replica coupling diverges on this schedule (gamma reaches 0)")
    return jp


def anneal_spins(batch: HamiltonianBatch, schedule: AnnealSchedule, n_reads: int, seeds,
                 backend: str | None = None) -> np.ndarray:
    """Run ``n_reads`` anneals for every Hamiltonian in ``batch``.

    Returns int8 spins shaped ``(len(batch), n_reads, n_spins)``.
    """
    if n_reads < 1:
        raise ValueError("n_reads must be >= 1")
    seeds = np.asarray(seeds, dtype=np.uint64).reshape(-1)
    if seeds.size != len(batch):
        raise ValueError(f"need one seed per query ({len(batch)}), got {seeds.size}")
    kernel = _BACKENDS[backend or BACKEND]
    index, weight, degree = batch.coupling_table()
    out = np.empty((len(batch), n_reads, batch.n_spins), dtype=np.int8)
    kernel.anneal(index, weight, degree, np.ascontiguousarray(batch.fields, dtype=np.float64),
                  batch.n_hidden, batch.n_replicas, _jperp_schedule(batch, schedule),
                  float(schedule.temperature), seeds, bool(schedule.random_order), out)
    return out


def sample_batch(batch: HamiltonianBatch, schedule: AnnealSchedule, n_reads: int, seeds,
                 backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    spins = anneal_spins(batch, schedule, n_reads, seeds, backend)
    return spins, batch.energies(spins)


def sample(h: EffectiveHamiltonian, schedule: AnnealSchedule, n_reads: int, seed: int,
           backend: str | None = None) -> ReadSet:
    """Draw ``n_reads`` annealed configurations of ``h``.

    Energies are evaluated on ``h`` itself, so build ``h`` at the schedule's
    final transverse field when the two should agree.
    """
    spins = anneal_spins(h.as_batch(), schedule, n_reads, [seed], backend)[0]
    return ReadSet(spins, h.energy(spins))


def seeds_from(rng: np.random.Generator, n: int) -> np.ndarray:
    """Query seeds spaced far apart so per-read streams never overlap."""
    return rng.integers(0, 2**62, size=n, dtype=np.uint64)


def exact_tv_noise_floor(probabilities, n_reads: int) -> float:
    """Expected total-variation distance of an ideal sampler at ``n_reads`` reads."""
    p = np.asarray(probabilities, dtype=np.float64)
    return float(0.5 * np.sum(np.sqrt(2.0 * p * (1 - p) / (math.pi * n_reads))))
