"""Deterministic multi-agent grid world.

Every agent has its own ball(s) to collect. Reaching an own ball pays
``+220``, stepping onto a penalty cell or another agent's uncollected ball
costs ``-220``, and every move costs ``-10`` on top. An agent is done once
all its balls are collected; the episode ends when every agent is done or
the step limit is hit.

Cells are ``(row, col)``; observations are laid out row-major.
"""

from __future__ import annotations

import copy
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

GOAL_REWARD = 220.0
PENALTY_REWARD = -220.0
STEP_REWARD = -10.0

ACTIONS = ("up", "down", "left", "right", "stay")
N_ACTIONS = len(ACTIONS)
_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1), (0, 0))

BUILTIN_LAYOUTS = ("3x3", "5x3", "3x3-2", "5x3-2")


class ConfigurationError(ValueError):
    pass


class EpisodeFinishedError(RuntimeError):
    pass


Cell = tuple[int, int]


@dataclass
class GridConfig:
    width: int
    height: int
    n_agents: int
    goal_positions: list[list[Cell]]
    penalty_cells: list[Cell] = field(default_factory=list)
    wall_cells: list[Cell] = field(default_factory=list)
    max_steps: int = 2000

    def __post_init__(self):
        self.goal_positions = [[tuple(c) for c in goals] for goals in self.goal_positions]
        self.penalty_cells = [tuple(c) for c in self.penalty_cells]
        self.wall_cells = [tuple(c) for c in self.wall_cells]
        if self.n_agents < 1:
            raise ConfigurationError("need at least one agent")
        if len(self.goal_positions) != self.n_agents:
            raise ConfigurationError("need one goal list per agent")
        goals = [c for gs in self.goal_positions for c in gs]
        groups = [goals, self.penalty_cells, self.wall_cells]
        everything = [c for g in groups for c in g]
        if len(set(everything)) != len(everything):
            raise ConfigurationError("goals, penalties and walls must be pairwise disjoint")
        for r, c in everything:
            if not (0 <= r < self.height and 0 <= c < self.width):
                raise ConfigurationError(f"cell {(r, c)} lies outside the {self.height}x{self.width} grid")
        if any(not gs for gs in self.goal_positions):
            raise ConfigurationError("every agent needs at least one goal")

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    @property
    def observation_size(self) -> int:
        return self.n_cells * (1 if self.n_agents == 1 else 2)

    def cell_index(self, cell: Cell) -> int:
        return cell[0] * self.width + cell[1]

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.height and 0 <= cell[1] < self.width

    def spawn_cells(self, agent: int) -> list[Cell]:
        """Cells an agent may start on: no walls, penalties or foreign goals."""
        blocked = set(self.wall_cells) | set(self.penalty_cells)
        for other, goals in enumerate(self.goal_positions):
            if other != agent:
                blocked.update(goals)
        return [(r, c) for r in range(self.height) for c in range(self.width) if (r, c) not in blocked]


@dataclass
class GridState:
    agent_positions: list[Cell]
    collected: list[list[bool]]
    done_flags: list[bool]
    step_count: int = 0
    spawn_rewards: list[float] = field(default_factory=list)

    def copy(self) -> GridState:
        return copy.deepcopy(self)


@dataclass
class StepOutcome:
    rewards: list[float]
    observations: list[np.ndarray]
    done_flags: list[bool]
    episode_done: bool


def parse_layout(text: str, max_steps: int = 2000) -> GridConfig:
    """Read a grid drawn with ``.`` free, ``#`` wall, ``X`` penalty, digit = that agent's goal."""
    rows = [line.strip() for line in text.splitlines()]
    rows = [r for r in rows if r and not r.startswith(";")]
    if not rows:
        raise ConfigurationError("empty layout")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ConfigurationError("layout rows must all have the same length")
    goals: dict[int, list[Cell]] = {}
    walls, penalties = [], []
    for r, line in enumerate(rows):
        for c, ch in enumerate(line):
            if ch == "#":
                walls.append((r, c))
            elif ch in "Xx":
                penalties.append((r, c))
            elif ch.isdigit():
                goals.setdefault(int(ch), []).append((r, c))
            elif ch != ".":
                raise ConfigurationError(f"unknown layout character {ch!r} at row {r}, col {c}")
    if not goals or sorted(goals) != list(range(len(goals))):
        raise ConfigurationError("goal digits must be 0..n-1 without gaps")
    return GridConfig(width, len(rows), len(goals), [goals[k] for k in range(len(goals))],
                      penalties, walls, max_steps)


def load_layout(ref: str, max_steps: int = 2000) -> GridConfig:
    """Load a built-in layout by name (``3x3``, ``5x3``, ``3x3-2``, ``5x3-2``) or a file path."""
    if ref in BUILTIN_LAYOUTS:
        text = resources.files("qbmrl").joinpath(f"layouts/{ref}.txt").read_text()
    else:
        path = Path(ref)
        if not path.is_file():
            raise ConfigurationError(f"no built-in layout or file named {ref!r}")
        text = path.read_text()
    return parse_layout(text, max_steps)


def reset(config: GridConfig, rng: np.random.Generator) -> tuple[GridState, list[np.ndarray]]:
    """Place agents uniformly at random on distinct admissible cells.

    An agent that spawns on one of its own balls collects it immediately; the
    ``+220`` is reported in ``state.spawn_rewards``.
    """
    taken: set[Cell] = set()
    positions = []
    for agent in range(config.n_agents):
        options = [c for c in config.spawn_cells(agent) if c not in taken]
        if not options:
            raise ConfigurationError(f"no free spawn cell left for agent {agent}")
        cell = options[int(rng.integers(len(options)))]
        taken.add(cell)
        positions.append(cell)
    collected = [[False] * len(g) for g in config.goal_positions]
    spawn_rewards = [0.0] * config.n_agents
    for agent, cell in enumerate(positions):
        for k, goal in enumerate(config.goal_positions[agent]):
            if goal == cell:
                collected[agent][k] = True
                spawn_rewards[agent] += GOAL_REWARD
    done = [all(c) for c in collected]
    state = GridState(positions, collected, done, 0, spawn_rewards)
    return state, observations(state, config)


def episode_done(state: GridState, config: GridConfig) -> bool:
    return all(state.done_flags) or state.step_count >= config.max_steps


def _move(config: GridConfig, cell: Cell, action: int) -> Cell:
    dr, dc = _MOVES[action]
    target = (cell[0] + dr, cell[1] + dc)
    if not config.in_bounds(target) or target in config.wall_cells:
        return cell
    return target


def step(state: GridState, config: GridConfig, joint_action) -> StepOutcome:
    """Advance every active agent simultaneously; mutates ``state``."""
    if episode_done(state, config):
        raise EpisodeFinishedError("episode is over; call reset()")
    joint_action = [int(a) for a in joint_action]
    if len(joint_action) != config.n_agents or any(not 0 <= a < N_ACTIONS for a in joint_action):
        raise ValueError(f"need {config.n_agents} actions in 0..{N_ACTIONS - 1}, got {joint_action}")
    foreign = [
        {g for k, g in enumerate(goals) if not state.collected[other][k]}
        for other, goals in enumerate(config.goal_positions)
    ]
    penalties = set(config.penalty_cells)
    rewards = [0.0] * config.n_agents
    for agent, action in enumerate(joint_action):
        if state.done_flags[agent]:
            continue
        cell = _move(config, state.agent_positions[agent], action)
        state.agent_positions[agent] = cell
        reward = STEP_REWARD
        own = config.goal_positions[agent]
        hit = [k for k, g in enumerate(own) if g == cell and not state.collected[agent][k]]
        if hit:
            state.collected[agent][hit[0]] = True
            reward += GOAL_REWARD
            state.done_flags[agent] = all(state.collected[agent])
        elif cell in penalties or any(cell in foreign[o] for o in range(config.n_agents) if o != agent):
            reward += PENALTY_REWARD
        rewards[agent] = reward
    state.step_count += 1
    return StepOutcome(rewards, observations(state, config), list(state.done_flags),
                       episode_done(state, config))


def encode_observation(state: GridState, config: GridConfig, agent: int) -> np.ndarray:
    """One-hot grid(s): own position and balls, then (multi-agent only) everyone else's."""
    if not 0 <= agent < config.n_agents:
        raise ValueError(f"agent index {agent} out of range")
    n = config.n_cells
    obs = np.zeros(config.observation_size, dtype=np.float64)
    obs[config.cell_index(state.agent_positions[agent])] = 1.0
    for k, goal in enumerate(config.goal_positions[agent]):
        if not state.collected[agent][k]:
            obs[config.cell_index(goal)] = 1.0
    for other in range(config.n_agents):
        if other == agent:
            continue
        obs[n + config.cell_index(state.agent_positions[other])] = 1.0
        for k, goal in enumerate(config.goal_positions[other]):
            if not state.collected[other][k]:
                obs[n + config.cell_index(goal)] = 1.0
    return obs


def observations(state: GridState, config: GridConfig) -> list[np.ndarray]:
    return [encode_observation(state, config, a) for a in range(config.n_agents)]


def shortest_distances(config: GridConfig, agent: int) -> dict[Cell, int]:
    """BFS distance to the agent's (first) ball, avoiding walls, penalties and foreign balls."""
    goal = config.goal_positions[agent][0]
    avoid = set(config.penalty_cells) | {
        g for o, gs in enumerate(config.goal_positions) if o != agent for g in gs
    }
    dist = {goal: 0}
    queue = deque([goal])
    while queue:
        cell = queue.popleft()
        for action in range(N_ACTIONS - 1):
            nxt = _move(config, cell, action)
            if nxt not in dist and nxt not in avoid:
                dist[nxt] = dist[cell] + 1
                queue.append(nxt)
    return dist


def optimal_action(config: GridConfig, state: GridState, agent: int) -> int:
    """Greedy shortest-path move toward the agent's first ball (scripted reference policy)."""
    dist = shortest_distances(config, agent)
    here = state.agent_positions[agent]
    best = min(range(N_ACTIONS - 1), key=lambda a: (dist.get(_move(config, here, a), 10**9), a))
    return best


class GridWorld:
    """Stateful wrapper pairing a config with its current state and RNG."""

    def __init__(self, config: GridConfig, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        self.state: GridState | None = None

    def reset(self) -> list[np.ndarray]:
        self.state, obs = reset(self.config, self.rng)
        return obs

    def step(self, joint_action) -> StepOutcome:
        return step(self.state, self.config, joint_action)

    @property
    def done(self) -> bool:
        return episode_done(self.state, self.config)
