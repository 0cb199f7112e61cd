import pytest
from hypothesis import given
from hypothesis import strategies as st

from qbmrl.config import (ConfigError, ExperimentConfig, dumps_config, load_config, loads_config,
                          save_config)
from qbmrl.rl import Hyperparameters

REFERENCE_DEFAULTS = {
    "nb_steps": "2000", "nb_episodes": "500", "nb_runs": "10", "learning_rate": "0.005",
    "discount": "0.8", "epsilon_decay": "0.0008", "minibatch_size": "8", "warm_up": "250",
    "target_update_period": "250", "buffer_capacity": "20000", "replicas": "1", "n_reads": "10",
    "num_sweeps": "1000",
}


def parse_echo(text):
    return dict(line.split(" = ", 1) for line in text.splitlines())


def test_default_echo_matches_reference_defaults():
    echo = parse_echo(dumps_config(ExperimentConfig()))
    assert echo["variant"] == "erb_and_target"
    for key, value in REFERENCE_DEFAULTS.items():
        assert echo[key] == value, key
    # the exploration floor is the one deliberate departure from the reference values
    assert echo["epsilon_min"] == "0.01"


def test_round_trip(tmp_path):
    cfg = ExperimentConfig(domain="5x3-2", agent_mode="shared", variant="plain", nb_runs=3,
                           seeds=[4, 9, 1], hyper=Hyperparameters(hidden_layout=(3, 2), replicas=2,
                                                                  coupling_mode="suzuki_trotter"))
    path = tmp_path / "c.txt"
    save_config(cfg, path)
    assert load_config(path) == cfg


@given(lr=st.floats(1e-6, 1.0), discount=st.floats(0, 0.99), sweeps=st.integers(1, 5000),
       layout=st.lists(st.integers(1, 9), min_size=1, max_size=4))
def test_round_trip_property(lr, discount, sweeps, layout):
    cfg = ExperimentConfig(hyper=Hyperparameters(learning_rate=lr, discount=discount,
                                                 num_sweeps=sweeps, hidden_layout=layout))
    assert loads_config(dumps_config(cfg)) == cfg


def test_comments_and_partial_files():
    cfg = loads_config("# tiny run\nnb_runs = 2   # two seeds\n\nnum_sweeps = 7\n")
    assert cfg.seeds == [0, 1]
    assert cfg.hyper.num_sweeps == 7
    assert loads_config("seeds = 5, 6, 7\n").nb_runs == 3


@pytest.mark.parametrize("text, where", [
    ("nb_runs = 2\nbogus_key = 1\n", "line 2"),
    ("variant = fancy\n", "variant"),
    ("no equals sign here\n", "line 1"),
    ("nb_episodes = many\n", "line 1"),
    ("discount = 1.5\n", "discount"),
    ("nb_runs = 2\nseeds = 1\n", "seeds"),
])
def test_config_errors(text, where):
    with pytest.raises(ConfigError, match=where):
        loads_config(text)


def test_variant_flags():
    flags = {v: (ExperimentConfig(variant=v).uses_buffer, ExperimentConfig(variant=v).uses_target)
             for v in ("plain", "erb_only", "target_only", "erb_and_target")}
    assert flags == {"plain": (False, False), "erb_only": (True, False),
                     "target_only": (False, True), "erb_and_target": (True, True)}
