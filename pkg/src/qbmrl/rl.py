"""Epsilon-greedy QBM agents, replay buffer and temporal-difference updates."""

from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Optional

import numpy as np

from .free_energy import SamplerParams, evaluate_visibles
from .network import DimensionError, QbmNetwork, copy_weights, new_network
from .sampler import AnnealSchedule, seeds_from

N_ACTIONS = 5


class InsufficientDataError(ValueError):
    pass


@dataclass
class Hyperparameters:
    learning_rate: float = 0.005
    discount: float = 0.8
    epsilon_initial: float = 1.0
    epsilon_min: float = 0.01
    epsilon_decay: float = 0.0008
    minibatch_size: int = 8
    warm_up: int = 250
    target_update_period: int = 250
    buffer_capacity: int = 20000
    replicas: int = 1
    n_reads: int = 10
    num_sweeps: int = 1000
    temperature: float = 1.0
    beta: float = 1.0
    gamma_initial: float = 20.0
    gamma_final: float = 0.01
    coupling_mode: str = "literal"
    sweep_order: str = "sequential"
    hidden_layout: tuple[int, ...] = (8,)
    target_rule: str = "max"
    update_mode: str = "batch"

    def __post_init__(self):
        self.hidden_layout = tuple(int(n) for n in self.hidden_layout)
        positive = ["learning_rate", "epsilon_decay", "minibatch_size", "target_update_period",
                    "buffer_capacity", "replicas", "n_reads", "num_sweeps", "temperature", "beta"]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 <= self.discount < 1:
            raise ValueError("discount must lie in [0, 1)")
        if not 0 <= self.epsilon_min <= self.epsilon_initial <= 1:
            raise ValueError("need 0 <= epsilon_min <= epsilon_initial <= 1")
        if self.warm_up < 0:
            raise ValueError("warm_up must be >= 0")
        if self.target_rule not in ("max", "sarsa"):
            raise ValueError("target_rule must be 'max' or 'sarsa'")
        if self.update_mode not in ("batch", "sample"):
            raise ValueError("update_mode must be 'batch' or 'sample'")
        if self.sweep_order not in ("sequential", "random"):
            raise ValueError("sweep_order must be 'sequential' or 'random'")

    def sampler_params(self, backend: str | None = None) -> SamplerParams:
        schedule = AnnealSchedule(self.num_sweeps, self.gamma_initial, self.gamma_final,
                                  self.temperature, self.beta, self.sweep_order == "random")
        return SamplerParams(schedule, self.n_reads, self.replicas, self.coupling_mode, backend)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool
    next_action: Optional[int] = None

    def __post_init__(self):
        if len(self.state) != len(self.next_state):
            raise DimensionError("state and next_state lengths differ")
        if not 0 <= self.action < N_ACTIONS:
            raise ValueError(f"action must be in 0..{N_ACTIONS - 1}")


class ReplayBuffer:
    """Bounded FIFO of transitions; the oldest entry is evicted first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.storage: deque[Transition] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.storage)

    def push(self, t: Transition) -> ReplayBuffer:
        self.storage.append(t)
        return self

    def sample(self, k: int, rng: np.random.Generator) -> list[Transition]:
        """``k`` distinct transitions chosen uniformly at random."""
        if len(self.storage) < k:
            raise InsufficientDataError(f"buffer holds {len(self.storage)} transitions, need {k}")
        idx = rng.choice(len(self.storage), size=k, replace=False)
        return [self.storage[i] for i in idx]


def push(buffer: ReplayBuffer, t: Transition) -> ReplayBuffer:
    return buffer.push(t)


def sample_minibatch(buffer: ReplayBuffer, k: int, rng: np.random.Generator) -> list[Transition]:
    return buffer.sample(k, rng)


QFunction = Callable[[QbmNetwork, np.ndarray], np.ndarray]


@dataclass(eq=False)
class Agent:
    policy_net: QbmNetwork
    target_net: QbmNetwork
    hyper: Hyperparameters
    epsilon: float
    rng: np.random.Generator
    backend: str | None = None
    q_function: Optional[QFunction] = field(default=None, repr=False)

    @property
    def has_separate_target(self) -> bool:
        return self.target_net is not self.policy_net

    @property
    def sampler(self) -> SamplerParams:
        return self.hyper.sampler_params(self.backend)

    def q_values(self, obs, net: QbmNetwork | None = None) -> np.ndarray:
        """Q(obs, a) for every action, by default from the policy network."""
        net = self.policy_net if net is None else net
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape != (net.state_size,):
            raise DimensionError(f"observation length {obs.shape} does not match {net.state_size} state units")
        if self.q_function is not None:
            return np.asarray(self.q_function(net, obs), dtype=np.float64)
        visibles = np.hstack([np.tile(obs, (N_ACTIONS, 1)), np.eye(N_ACTIONS)])
        est = evaluate_visibles(net, visibles, self.sampler, seeds_from(self.rng, N_ACTIONS))
        return est.q_values


def make_agent(state_size: int, hyper: Hyperparameters, seed: int, separate_target: bool = True,
               backend: str | None = None) -> Agent:
    """Policy and target networks start out identical."""
    policy = new_network(state_size, N_ACTIONS, hyper.hidden_layout, seed)
    target = policy.copy() if separate_target else policy
    rng = np.random.default_rng([seed, 1])
    return Agent(policy, target, hyper, hyper.epsilon_initial, rng, backend)


def select_action(agent: Agent, obs, rng: np.random.Generator) -> int:
    """Random action with probability epsilon, otherwise the greedy one (lowest index on ties)."""
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape != (agent.policy_net.state_size,):
        raise DimensionError(f"observation length {obs.shape} does not match the network")
    if rng.random() < agent.epsilon:
        return int(rng.integers(N_ACTIONS))
    return int(np.argmax(agent.q_values(obs)))


@dataclass
class TDResult:
    td_errors: np.ndarray
    deltas: list[np.ndarray]


def _onehot(action: int) -> np.ndarray:
    v = np.zeros(N_ACTIONS)
    v[action] = 1.0
    return v


def _target_q(agent: Agent, batch: list[Transition]) -> np.ndarray:
    target_q = np.zeros(len(batch))
    live = [i for i, t in enumerate(batch) if not t.done]
    if not live:
        return target_q
    net = agent.target_net
    if agent.q_function is not None:
        for i in live:
            t = batch[i]
            q = agent.q_values(t.next_state, net)
            target_q[i] = q[t.next_action] if agent.hyper.target_rule == "sarsa" else q.max()
        return target_q
    if agent.hyper.target_rule == "sarsa":
        if any(batch[i].next_action is None for i in live):
            raise ValueError("sarsa targets need next_action on every non-terminal transition")
        visibles = np.array([np.concatenate([batch[i].next_state, _onehot(batch[i].next_action)])
                             for i in live])
        est = evaluate_visibles(net, visibles, agent.sampler, seeds_from(agent.rng, len(live)))
        target_q[live] = est.q_values
    else:
        visibles = np.vstack([
            np.hstack([np.tile(batch[i].next_state, (N_ACTIONS, 1)), np.eye(N_ACTIONS)]) for i in live
        ])
        est = evaluate_visibles(net, visibles, agent.sampler, seeds_from(agent.rng, len(visibles)))
        target_q[live] = est.q_values.reshape(len(live), N_ACTIONS).max(axis=1)
    return target_q


def _batch_deltas(agent: Agent, batch: list[Transition]) -> TDResult:
    net = agent.policy_net
    states = np.array([t.state for t in batch], dtype=np.float64)
    actions = np.array([_onehot(t.action) for t in batch])
    rewards = np.array([t.reward for t in batch], dtype=np.float64)
    target_q = _target_q(agent, batch)
    est = evaluate_visibles(net, np.hstack([states, actions]), agent.sampler,
                            seeds_from(agent.rng, len(batch)))
    td = rewards + agent.hyper.discount * target_q + est.free_energy
    scale = agent.hyper.learning_rate * td / len(batch)

    offs = net.hidden_offsets
    first = est.mean_spin[:, offs[0]:offs[1]]
    last = est.mean_spin[:, offs[-2]:offs[-1]]
    deltas = [np.einsum("b,bi,bj->ij", scale, states, first)]
    edge_start = 0
    for k in range(len(net.hidden_layout) - 1):
        shape = net.weights[k + 1].shape
        n = shape[0] * shape[1]
        pair = est.mean_pair[:, edge_start:edge_start + n]
        deltas.append((scale @ pair).reshape(shape))
        edge_start += n
    deltas.append(np.einsum("b,bi,bj->ij", scale, last, actions))
    hidden_bias = scale @ est.mean_spin
    bias_deltas = [scale @ states]
    for k in range(len(net.hidden_layout)):
        bias_deltas.append(hidden_bias[offs[k]:offs[k + 1]])
    bias_deltas.append(scale @ actions)
    return TDResult(td, deltas + bias_deltas)


def td_update(agent: Agent, batch: list[Transition]) -> TDResult:
    """One temporal-difference step on the policy network.

    The TD error of a transition is ``r - discount * F_target + F(s, a)``,
    i.e. ``r + discount * Q_target - Q(s, a)`` with ``Q = -F``; the target is
    the target network's best next-state Q (or the next action's Q under the
    ``sarsa`` rule) and 0 for terminal transitions. Visible-hidden weights
    move by ``lr * td * v * <s_h>``, hidden-hidden ones by
    ``lr * td * <s_h s_h'>``. In ``batch`` mode the per-transition deltas are
    averaged and applied once.
    """
    if not batch:
        raise ValueError("td_update needs a non-empty batch")
    if agent.hyper.update_mode == "sample" and len(batch) > 1:
        results = [td_update_single(agent, t) for t in batch]
        deltas = [np.sum([r.deltas[i] for r in results], axis=0) for i in range(len(results[0].deltas))]
        return TDResult(np.concatenate([r.td_errors for r in results]), deltas)
    result = _batch_deltas(agent, batch)
    for param, delta in zip(agent.policy_net.parameters(), result.deltas):
        param += delta
    return result


def td_update_single(agent: Agent, t: Transition) -> TDResult:
    result = _batch_deltas(agent, [t])
    for param, delta in zip(agent.policy_net.parameters(), result.deltas):
        param += delta
    return result


def maybe_sync_target(agent: Agent, global_step: int) -> Agent:
    if agent.has_separate_target and global_step % agent.hyper.target_update_period == 0:
        copy_weights(agent.policy_net, agent.target_net)
    return agent


def decay_epsilon(agent: Agent) -> Agent:
    agent.epsilon = max(agent.hyper.epsilon_min, agent.epsilon - agent.hyper.epsilon_decay)
    return agent


@dataclass
class AgentPool:
    """Per-agent handles; in shared mode every slot points at the same agent and buffer."""

    mode: str
    agents: list[Agent]
    buffers: list[ReplayBuffer]

    @property
    def unique_agents(self) -> list[Agent]:
        seen: dict[int, Agent] = {}
        for a in self.agents:
            seen.setdefault(id(a), a)
        return list(seen.values())

    @property
    def unique_buffers(self) -> list[ReplayBuffer]:
        seen: dict[int, ReplayBuffer] = {}
        for b in self.buffers:
            seen.setdefault(id(b), b)
        return list(seen.values())

    def networks(self) -> list[QbmNetwork]:
        seen: dict[int, QbmNetwork] = {}
        for a in self.unique_agents:
            seen.setdefault(id(a.policy_net), a.policy_net)
            seen.setdefault(id(a.target_net), a.target_net)
        return list(seen.values())


def make_agent_pool(n_agents: int, mode: str, hyper: Hyperparameters, seed: int, state_size: int,
                    separate_target: bool = True, backend: str | None = None) -> AgentPool:
    if n_agents < 1:
        raise ValueError("need at least one agent")
    if mode == "independent":
        agents = [make_agent(state_size, hyper, seed * 1000 + i, separate_target, backend)
                  for i in range(n_agents)]
        buffers = [ReplayBuffer(hyper.buffer_capacity) for _ in range(n_agents)]
    elif mode == "shared":
        agent = make_agent(state_size, hyper, seed * 1000, separate_target, backend)
        buffer = ReplayBuffer(hyper.buffer_capacity)
        agents, buffers = [agent] * n_agents, [buffer] * n_agents
    else:
        raise ValueError(f"agent mode must be 'independent' or 'shared', got {mode!r}")
    return AgentPool(mode, agents, buffers)
