import csv

import numpy as np
import pytest

from qbmrl import gridworld
from qbmrl.config import ExperimentConfig, load_config
from qbmrl.harness import (EPISODE_HEADER, EVAL_HEADER, CsvFormatError, RewardStats,
                           evaluate_agents, evaluate_policy, read_csv, run_experiment, summarize,
                           train_run)
from qbmrl.network import TopologyError, new_network, save_network
from qbmrl.rl import Hyperparameters

TINY = Hyperparameters(num_sweeps=5, n_reads=3, hidden_layout=(3,), warm_up=5, minibatch_size=2,
                       target_update_period=5, epsilon_decay=0.05)


def tiny_config(**kw):
    base = dict(domain="3x3", nb_episodes=3, nb_steps=25, nb_runs=2, eval_episodes=3, hyper=TINY)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def tiny_experiment(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp") / "a"
    return run_experiment(tiny_config(), out)


def test_artifact_layout(tiny_experiment):
    assert (tiny_experiment / "config.txt").is_file()
    for run in ("run_000", "run_001"):
        d = tiny_experiment / run
        assert {p.name for p in d.iterdir()} == {"episodes.csv", "eval.csv", "agent0.txt"}
    rows = read_csv(tiny_experiment / "run_000" / "episodes.csv", EPISODE_HEADER)
    assert [r["episode"] for r in rows] == [0, 1, 2]
    assert len(read_csv(tiny_experiment / "run_001" / "eval.csv", EVAL_HEADER)) == 3
    assert load_config(tiny_experiment / "config.txt") == tiny_config()


def test_byte_identical_reruns(tiny_experiment, tmp_path):
    again = run_experiment(tiny_config(), tmp_path / "b")
    for name in ("config.txt", "run_000/episodes.csv", "run_001/eval.csv", "run_001/agent0.txt"):
        assert (again / name).read_bytes() == (tiny_experiment / name).read_bytes()


def test_parallel_workers_match_serial(tiny_experiment, tmp_path):
    par = run_experiment(tiny_config(workers=2), tmp_path / "p")
    for name in ("run_000/episodes.csv", "run_001/episodes.csv"):
        assert (par / name).read_bytes() == (tiny_experiment / name).read_bytes()


@pytest.mark.parametrize("variant", ["plain", "erb_only", "target_only", "erb_and_target"])
def test_logged_rewards_match_environment(variant):
    cfg = tiny_config(variant=variant, domain="3x3-2", nb_runs=1)
    records, agents, cross = train_run(cfg, 0)
    logged = {}
    for r in records:
        logged[r.episode] = logged.get(r.episode, 0.0) + r.reward
    assert [logged[e] for e in sorted(logged)] == [float(c.sum()) for c in cross]
    assert all(a.has_separate_target == cfg.uses_target for a in agents)


def test_shared_mode_single_learner():
    records, agents, _ = train_run(tiny_config(domain="3x3-2", agent_mode="shared", nb_runs=1), 0)
    assert agents[0] is agents[1]
    assert {r.agent for r in records} == {0, 1}


def test_epsilon_untouched_during_warm_up():
    hyper = Hyperparameters(num_sweeps=3, n_reads=2, hidden_layout=(2,), warm_up=10**6)
    records, _, _ = train_run(tiny_config(hyper=hyper, nb_runs=1), 0)
    assert all(r.epsilon == 1.0 for r in records)


def test_scripted_optimal_agent_reward():
    config = gridworld.load_layout("5x3")
    dist = gridworld.shortest_distances(config, 0)
    # the scripted policy draws nothing, so an identically seeded probe replays the spawns
    probe = np.random.default_rng(0)
    starts = [gridworld.reset(config, probe)[0].agent_positions[0] for _ in range(50)]
    rewards, _ = evaluate_agents(lambda i, obs, state: gridworld.optimal_action(config, state, i),
                                 config, 50, np.random.default_rng(0))
    np.testing.assert_array_equal(rewards[:, 0], [220 - 10 * dist[c] for c in starts])


def test_evaluate_policy_checkpoint(tiny_experiment):
    stats = evaluate_policy(tiny_experiment / "run_000", "3x3", episodes=4)
    assert stats.rewards.size == 4
    assert stats.min <= stats.median <= stats.max
    again = evaluate_policy(tiny_experiment / "run_000" / "agent0.txt", "3x3", episodes=4)
    np.testing.assert_array_equal(stats.rewards, again.rewards)


def test_evaluate_policy_topology_mismatch(tmp_path):
    save_network(new_network(15, 5, [3], 0), tmp_path / "net.txt")
    with pytest.raises(TopologyError):
        evaluate_policy(tmp_path / "net.txt", "3x3", episodes=1, hyper=TINY)


def test_reward_stats():
    s = RewardStats.of([190, 200, 210, 220])
    assert s.median == 205 and s.min == 190 and s.max == 220


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fake_experiment(root, rewards_per_run, eval_rewards=None, variant="plain"):
    root.mkdir(parents=True)
    (root / "config.txt").write_text(f"variant = {variant}\nnb_runs = {len(rewards_per_run)}\n")
    for run, rewards in enumerate(rewards_per_run):
        d = root / f"run_{run:03d}"
        d.mkdir()
        _write_rows(d / "episodes.csv", EPISODE_HEADER,
                    [[run, e, 0, repr(float(r)), 5, "0.5"] for e, r in enumerate(rewards)])
        if eval_rewards is not None:
            _write_rows(d / "eval.csv", EVAL_HEADER,
                        [[run, e, 0, repr(float(r)), 3] for e, r in enumerate(eval_rewards)])


def test_summarize_constant_curve(tmp_path):
    _fake_experiment(tmp_path / "in" / "flat", [[100.0] * 20] * 10, eval_rewards=[190, 200, 210, 220])
    (s,) = summarize(tmp_path / "in", tmp_path / "out", tail=10)
    np.testing.assert_array_equal(s.curve, 100.0)
    assert s.final_std == 0.0
    assert s.eval_stats.median == 205
    rows = list(csv.DictReader(open(tmp_path / "out" / "boxplot.csv")))
    assert float(rows[0]["median"]) == 205
    curves = list(csv.DictReader(open(tmp_path / "out" / "curves.csv")))
    assert len(curves) == 20 and all(float(r["mean_reward"]) == 100 for r in curves)


def test_summarize_std_column(tmp_path):
    rng = np.random.default_rng(2)
    series = [rng.normal(0, 30, size=40).round(3) for _ in range(3)]
    _fake_experiment(tmp_path / "in" / "noisy", series, variant="erb_and_target")
    summarize(tmp_path / "in", tmp_path / "out", tail=25)
    row = next(csv.DictReader(open(tmp_path / "out" / "comparison.csv")))
    expected = np.mean([np.std(s[-25:]) for s in series])
    assert float(row["final_std"]) == pytest.approx(expected, abs=1e-12)
    assert row["variant"] == "erb_and_target"


@pytest.mark.parametrize("body, line", [
    ("run,episode,agent,reward,steps,epsilon\n0,0,0,1.0,5,0.5\n0,1,0,oops,5,0.5\n", 3),
    ("run,episode,agent,reward,steps,epsilon\n0,0,0,1.0,5\n", 2),
    ("run,episode,reward\n", 1),
])
def test_malformed_csv_reports_line(tmp_path, body, line):
    path = tmp_path / "episodes.csv"
    path.write_text(body)
    with pytest.raises(CsvFormatError, match=f":{line}:"):
        read_csv(path, EPISODE_HEADER)


def test_summarize_without_experiments(tmp_path):
    with pytest.raises(FileNotFoundError):
        summarize(tmp_path, tmp_path / "out")
