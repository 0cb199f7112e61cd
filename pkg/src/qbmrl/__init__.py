"""Multi-agent Q-learning with quantum Boltzmann machine function approximators.

Q-values are negative free energies of a clamped Boltzmann machine whose
hidden spins are sampled by simulated quantum annealing.
"""

from .config import ExperimentConfig, load_config
from .free_energy import SamplerParams, estimate_free_energy, q_value
from .gridworld import GridWorld, load_layout
from .hamiltonian import build_effective_hamiltonian
from .network import QbmNetwork, classical_clamped_energy, new_network
from .oracle import exact_free_energy
from .rl import Hyperparameters, ReplayBuffer, make_agent, select_action, td_update
from .sampler import BACKEND, AnnealSchedule, sample

__version__ = "0.1.0"

__all__ = [
    "AnnealSchedule", "BACKEND", "ExperimentConfig", "GridWorld", "Hyperparameters", "QbmNetwork",
    "ReplayBuffer", "SamplerParams", "build_effective_hamiltonian", "classical_clamped_energy",
    "estimate_free_energy", "exact_free_energy", "load_config", "load_layout", "make_agent",
    "new_network", "q_value", "sample", "select_action", "td_update",
]
