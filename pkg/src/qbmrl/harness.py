"""Training loop, greedy evaluation and result summaries."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import gridworld
from .config import ExperimentConfig, dumps_config, load_config
from .network import TopologyError, load_network, save_network
from .rl import (Agent, Hyperparameters, Transition, decay_epsilon, make_agent_pool,
                 maybe_sync_target, select_action, td_update)

log = logging.getLogger(__name__)

EPISODE_HEADER = ["run", "episode", "agent", "reward", "steps", "epsilon"]
EVAL_HEADER = ["run", "episode", "agent", "reward", "steps"]


class CsvFormatError(ValueError):
    pass


@dataclass
class EpisodeRecord:
    run: int
    episode: int
    agent: int
    reward: float
    steps: int
    epsilon: float

    def row(self) -> list[str]:
        return [str(self.run), str(self.episode), str(self.agent), repr(float(self.reward)),
                str(self.steps), repr(float(self.epsilon))]


@dataclass
class RunResult:
    run: int
    records: list[EpisodeRecord]
    eval_rewards: np.ndarray | None
    step_rewards_total: list[np.ndarray]


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue())


def train_run(config: ExperimentConfig, run: int) -> tuple[list[EpisodeRecord], list[Agent], list[np.ndarray]]:
    """Train one seed.

    Returns the episode records, the per-agent handles, and per-episode
    reward sums accumulated straight from the environment's step outputs
    (a cross-check on the logged rewards).
    """
    seed = config.seeds[run]
    hyper = config.hyper
    env_cfg = gridworld.load_layout(config.domain, max_steps=config.nb_steps)
    env = gridworld.GridWorld(env_cfg, np.random.default_rng([seed, 0]))
    explore = np.random.default_rng([seed, 2])
    replay = np.random.default_rng([seed, 3])
    pool = make_agent_pool(env_cfg.n_agents, config.agent_mode, hyper, seed,
                           env_cfg.observation_size, config.uses_target, config.backend)
    learners = pool.unique_agents
    sarsa = hyper.target_rule == "sarsa"
    records: list[EpisodeRecord] = []
    cross_check: list[np.ndarray] = []
    global_step = 0

    for episode in range(config.nb_episodes):
        obs = env.reset()
        totals = list(env.state.spawn_rewards)
        raw_sum = np.array(env.state.spawn_rewards, dtype=np.float64)
        pending: list[Transition | None] = [None] * env_cfg.n_agents
        while not env.done:
            active = [not d for d in env.state.done_flags]
            actions = [select_action(pool.agents[i], obs[i], explore) if active[i] else 4
                       for i in range(env_cfg.n_agents)]
            if sarsa:
                for i, t in enumerate(pending):
                    if t is not None and active[i]:
                        t.next_action = actions[i]
                        pool.buffers[i].push(t)
                pending = [None] * env_cfg.n_agents
            out = env.step(actions)
            global_step += 1
            fresh: dict[int, list[Transition]] = {}
            for i in range(env_cfg.n_agents):
                if not active[i]:
                    continue
                totals[i] += out.rewards[i]
                t = Transition(obs[i], actions[i], out.rewards[i], out.observations[i], out.done_flags[i])
                fresh.setdefault(id(pool.agents[i]), []).append(t)
                if sarsa and not t.done:
                    pending[i] = t
                else:
                    pool.buffers[i].push(t)
            raw_sum += out.rewards
            obs = out.observations

            if global_step > hyper.warm_up:
                for agent in learners:
                    slot = pool.agents.index(agent)
                    if config.uses_buffer:
                        buffer = pool.buffers[slot]
                        if len(buffer) < hyper.minibatch_size:
                            continue
                        batch = buffer.sample(hyper.minibatch_size, replay)
                    else:
                        batch = [t for t in fresh.get(id(agent), []) if not sarsa or t.done]
                        if not batch:
                            continue
                    td_update(agent, batch)
                    decay_epsilon(agent)
            for agent in learners:
                maybe_sync_target(agent, global_step)

        steps = env.state.step_count
        for i in range(env_cfg.n_agents):
            records.append(EpisodeRecord(run, episode, i, totals[i], steps, pool.agents[i].epsilon))
        cross_check.append(raw_sum)
        if episode % 50 == 0 or episode == config.nb_episodes - 1:
            log.info("run %d episode %d: team reward %.1f, %d steps, epsilon %.3f",
                     run, episode, sum(totals), steps, pool.agents[0].epsilon)
    return records, pool.agents, cross_check


def evaluate_agents(policy: Callable[[int, np.ndarray, gridworld.GridState], int],
                    env_cfg: gridworld.GridConfig, episodes: int,
                    rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Run ``episodes`` episodes with a fixed policy.

    Returns per-agent rewards ``(episodes, n_agents)`` and episode lengths.
    """
    rewards = np.zeros((episodes, env_cfg.n_agents))
    steps = np.zeros(episodes, dtype=int)
    env = gridworld.GridWorld(env_cfg, rng)
    for ep in range(episodes):
        obs = env.reset()
        totals = np.array(env.state.spawn_rewards, dtype=np.float64)
        while not env.done:
            actions = [policy(i, obs[i], env.state) if not env.state.done_flags[i] else 4
                       for i in range(env_cfg.n_agents)]
            out = env.step(actions)
            totals += out.rewards
            obs = out.observations
        rewards[ep] = totals
        steps[ep] = env.state.step_count
    return rewards, steps


def greedy_policy(agents: Sequence[Agent]) -> Callable:
    def act(i, obs, _state):
        return int(np.argmax(agents[i].q_values(obs)))
    return act


@dataclass
class RewardStats:
    rewards: np.ndarray
    median: float
    q1: float
    q3: float
    min: float
    max: float

    @classmethod
    def of(cls, rewards) -> RewardStats:
        r = np.asarray(rewards, dtype=np.float64)
        q1, med, q3 = np.percentile(r, [25, 50, 75])
        return cls(r, float(med), float(q1), float(q3), float(r.min()), float(r.max()))


def _run_one(config: ExperimentConfig, run: int, out_dir: Path) -> RunResult:
    run_dir = out_dir / f"run_{run:03d}"
    run_dir.mkdir(parents=True, exist_ok=True)
    records, agents, cross_check = train_run(config, run)
    _write_csv(run_dir / "episodes.csv", EPISODE_HEADER, [r.row() for r in records])
    for i, agent in enumerate(agents):
        save_network(agent.policy_net, run_dir / f"agent{i}.txt")
    eval_rewards = None
    if config.eval_episodes:
        env_cfg = gridworld.load_layout(config.domain, max_steps=config.nb_steps)
        for agent in agents:
            agent.epsilon = 0.0
        rewards, steps = evaluate_agents(greedy_policy(agents), env_cfg, config.eval_episodes,
                                         np.random.default_rng([config.seeds[run], 4]))
        rows = [[str(run), str(ep), str(i), repr(float(rewards[ep, i])), str(int(steps[ep]))]
                for ep in range(len(rewards)) for i in range(rewards.shape[1])]
        _write_csv(run_dir / "eval.csv", EVAL_HEADER, rows)
        eval_rewards = rewards.sum(axis=1)
    return RunResult(run, records, eval_rewards, cross_check)


def run_experiment(config: ExperimentConfig, out_dir) -> Path:
    """Train (and evaluate) every seed of ``config``; artifacts go under ``out_dir``.

    Layout: ``config.txt`` plus ``run_NNN/{episodes.csv, eval.csv, agentI.txt}``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.txt").write_text(dumps_config(config))
    runs = range(config.nb_runs)
    if config.workers > 1 and config.nb_runs > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            list(pool.map(_run_one, [config] * config.nb_runs, runs, [out_dir] * config.nb_runs))
    else:
        for run in runs:
            _run_one(config, run, out_dir)
    return out_dir


def _load_checkpoint(checkpoint: Path, n_agents: int):
    if checkpoint.is_dir():
        files = [checkpoint / f"agent{i}.txt" for i in range(n_agents)]
        missing = [f for f in files if not f.is_file()]
        if missing:
            raise FileNotFoundError(f"checkpoint directory lacks {missing[0].name}")
        return [load_network(f) for f in files]
    net = load_network(checkpoint)
    return [net] * n_agents


def _find_config(checkpoint: Path) -> Path | None:
    start = checkpoint if checkpoint.is_dir() else checkpoint.parent
    for d in (start, start.parent):
        if (d / "config.txt").is_file():
            return d / "config.txt"
    return None


def evaluate_policy(checkpoint, domain, episodes: int = 100, hyper: Hyperparameters | None = None,
                    seed: int = 0, max_steps: int | None = None) -> RewardStats:
    """Greedy (epsilon = 0) team rewards of a saved policy; no learning happens.

    ``checkpoint`` is a network file (shared by all agents) or a run directory
    holding ``agent0.txt``, ``agent1.txt``, .... Sampler settings come from
    ``hyper``, else from a ``config.txt`` next to the checkpoint, else defaults.
    """
    checkpoint = Path(checkpoint)
    cfg_path = _find_config(checkpoint)
    if hyper is None:
        hyper = load_config(cfg_path).hyper if cfg_path else Hyperparameters()
    if max_steps is None:
        max_steps = load_config(cfg_path).nb_steps if cfg_path else 2000
    env_cfg = (domain if isinstance(domain, gridworld.GridConfig)
               else gridworld.load_layout(str(domain), max_steps=max_steps))
    nets = _load_checkpoint(checkpoint, env_cfg.n_agents)
    for net in nets:
        if net.state_size != env_cfg.observation_size or net.action_size != gridworld.N_ACTIONS:
            raise TopologyError(
                f"checkpoint expects {net.state_size} observations/{net.action_size} actions, "
                f"domain gives {env_cfg.observation_size}/{gridworld.N_ACTIONS}"
            )
    agents = [Agent(net, net, hyper, 0.0, np.random.default_rng([seed, 5, i]))
              for i, net in enumerate(nets)]
    rewards, _ = evaluate_agents(greedy_policy(agents), env_cfg, episodes,
                                 np.random.default_rng([seed, 4]))
    return RewardStats.of(rewards.sum(axis=1))


# -- summaries -------------------------------------------------------------------


def read_csv(path, header: list[str]) -> list[dict]:
    """Parse one of our CSV logs, reporting the first malformed line."""
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first != header:
            raise CsvFormatError(f"{path}:1: expected header {','.join(header)}")
        for row in reader:
            lineno = reader.line_num
            if len(row) != len(header):
                raise CsvFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                parsed = {}
                for key, value in zip(header, row):
                    parsed[key] = float(value) if key in ("reward", "epsilon") else int(value)
            except ValueError:
                raise CsvFormatError(f"{path}:{lineno}: non-numeric field in {row}") from None
            rows.append(parsed)
    return rows


def team_rewards(rows: list[dict]) -> dict[int, dict[int, float]]:
    """``{run: {episode: summed reward over agents}}``."""
    out: dict[int, dict[int, float]] = {}
    for row in rows:
        runs = out.setdefault(row["run"], {})
        runs[row["episode"]] = runs.get(row["episode"], 0.0) + row["reward"]
    return out


@dataclass
class ExperimentSummary:
    label: str
    variant: str
    domain: str
    agent_mode: str
    curve: np.ndarray
    final_std: float
    final_mean: float
    eval_stats: RewardStats | None


def summarize_experiment(exp_dir: Path, label: str | None = None, tail: int = 100) -> ExperimentSummary:
    exp_dir = Path(exp_dir)
    config = load_config(exp_dir / "config.txt")
    curves, stds, means, evals = [], [], [], []
    for run_dir in sorted(exp_dir.glob("run_*")):
        per_run = team_rewards(read_csv(run_dir / "episodes.csv", EPISODE_HEADER))
        for episodes in per_run.values():
            series = np.array([episodes[e] for e in sorted(episodes)])
            curves.append(series)
            stds.append(float(np.std(series[-tail:])))
            means.append(float(np.mean(series[-tail:])))
        eval_path = run_dir / "eval.csv"
        if eval_path.is_file():
            for episodes in team_rewards(read_csv(eval_path, EVAL_HEADER)).values():
                evals.extend(episodes[e] for e in sorted(episodes))
    if not curves:
        raise CsvFormatError(f"{exp_dir}: no run_*/episodes.csv found")
    length = min(len(c) for c in curves)
    curve = np.mean([c[:length] for c in curves], axis=0)
    return ExperimentSummary(label or exp_dir.name, config.variant, config.domain, config.agent_mode,
                             curve, float(np.mean(stds)), float(np.mean(means)),
                             RewardStats.of(evals) if evals else None)


def summarize(in_dir, out_dir, tail: int = 100) -> list[ExperimentSummary]:
    """Summarize every experiment (directory with ``config.txt``) below ``in_dir``.

    Writes ``curves.csv`` (run-averaged learning curves), ``boxplot.csv``
    (evaluation reward statistics) and ``comparison.csv`` (one row per
    experiment, including the std of the last ``tail`` training rewards).
    """
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    exp_dirs = sorted(p.parent for p in in_dir.rglob("config.txt"))
    if not exp_dirs:
        raise FileNotFoundError(f"no experiment directories (config.txt) under {in_dir}")
    summaries = [summarize_experiment(d, str(d.relative_to(in_dir)) if d != in_dir else d.name, tail)
                 for d in exp_dirs]
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "curves.csv", ["label", "episode", "mean_reward"],
               [[s.label, str(e), repr(float(v))] for s in summaries for e, v in enumerate(s.curve)])
    box_rows = []
    for s in summaries:
        if s.eval_stats is not None:
            st = s.eval_stats
            box_rows.append([s.label, str(st.rewards.size)] +
                            [repr(x) for x in (st.median, st.q1, st.q3, st.min, st.max)])
    _write_csv(out_dir / "boxplot.csv", ["label", "n", "median", "q1", "q3", "min", "max"], box_rows)
    _write_csv(out_dir / "comparison.csv",
               ["label", "variant", "domain", "agent_mode", "final_std", "final_mean", "eval_median"],
               [[s.label, s.variant, s.domain, s.agent_mode, repr(s.final_std), repr(s.final_mean),
                 repr(s.eval_stats.median) if s.eval_stats else ""] for s in summaries])
    return summaries
