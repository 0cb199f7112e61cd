import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbmrl.network import (DimensionError, TopologyError, classical_clamped_energy, copy_weights,
                           dumps_network, load_network, loads_network, new_network, save_network,
                           zero_network)

from .conftest import random_clamp


def test_fig1_topology_counts():
    net = new_network(7, 5, [4, 4, 4], seed=0)
    assert net.n_edges == 7 * 4 + 4 * 4 + 4 * 4 + 4 * 5 == 80
    assert net.n_biases == 24


def test_minimal_topology():
    for seed in range(5):
        net = new_network(1, 1, [1], seed)
        assert (net.n_edges, net.n_biases) == (2, 3)


@pytest.mark.parametrize("sizes", [(0, 5, [4]), (7, 0, [4]), (7, 5, [4, 0, 4]), (7, 5, [])])
def test_zero_size_layer_rejected(sizes):
    with pytest.raises(TopologyError):
        new_network(*sizes, seed=0)


def test_layered_edge_set(fig1_net):
    shapes = [w.shape for w in fig1_net.weights]
    assert shapes == [(7, 4), (4, 4), (4, 4), (4, 5)]
    hi, hj, _ = fig1_net.hidden_edges()
    layer = np.repeat(np.arange(3), 4)
    assert np.all(layer[hj] == layer[hi] + 1)


def test_seed_determinism():
    a, b = new_network(7, 5, [4, 4, 4], 11), new_network(7, 5, [4, 4, 4], 11)
    assert a.fingerprint() == b.fingerprint()
    assert new_network(7, 5, [4, 4, 4], 12).fingerprint() != a.fingerprint()


def test_initial_weights_standard_normal():
    draws = np.concatenate([new_network(7, 5, [4, 4, 4], s).weights[k].ravel()
                            for s in range(1250) for k in range(4)])
    assert draws.size == 10**5
    assert abs(draws.mean()) < 0.01
    assert abs(draws.std() - 1.0) < 0.01
    assert np.all(np.isfinite(draws))


def test_zero_network_energy_is_zero(rng):
    net = zero_network(3, 5, [2, 2])
    for _ in range(10):
        s, a = random_clamp(rng, net)
        h = rng.choice([-1, 1], size=net.n_hidden)
        assert classical_clamped_energy(net, s, a, h) == 0.0


def test_hand_evaluated_energy(tiny_net):
    assert classical_clamped_energy(tiny_net, [1], [0], [1]) == -0.5
    assert classical_clamped_energy(tiny_net, [1], [0], [-1]) == 0.5


def test_dimension_mismatch(fig1_net):
    with pytest.raises(DimensionError):
        classical_clamped_energy(fig1_net, np.zeros(6), np.zeros(5), np.ones(12))
    with pytest.raises(DimensionError):
        classical_clamped_energy(fig1_net, np.zeros(7), np.zeros(5), np.ones(11))


def _brute_energy(net, state, action, hidden):
    """Independent edge-by-edge evaluation of the clamped Hopfield energy."""
    values = [np.asarray(state, float)]
    offs = net.hidden_offsets
    values += [np.asarray(hidden, float)[offs[k]:offs[k + 1]] for k in range(len(net.hidden_layout))]
    values.append(np.asarray(action, float))
    e = 0.0
    for k, w in enumerate(net.weights):
        for i, j in itertools.product(range(w.shape[0]), range(w.shape[1])):
            e -= values[k][i] * w[i, j] * values[k + 1][j]
    for k, b in enumerate(net.biases):
        e -= float(b @ values[k])
    return e


@given(seed=st.integers(0, 2**31), layout=st.lists(st.integers(1, 4), min_size=1, max_size=3))
@settings(max_examples=40, deadline=None)
def test_energy_matches_edge_sum(seed, layout):
    rng = np.random.default_rng(seed)
    net = new_network(3, 5, layout, seed)
    s, a = random_clamp(rng, net)
    h = rng.choice([-1, 1], size=net.n_hidden)
    assert classical_clamped_energy(net, s, a, h) == pytest.approx(_brute_energy(net, s, a, h), abs=1e-12)


def _negated(net):
    flipped = net.copy()
    for p in flipped.parameters():
        p *= -1
    return flipped


@given(seed=st.integers(0, 2**31), width=st.integers(1, 8))
@settings(max_examples=40, deadline=None)
def test_energy_symmetry_under_global_negation(seed, width):
    rng = np.random.default_rng(seed)
    net = new_network(4, 5, [width], seed)
    s, a = np.zeros(4), np.zeros(5)
    h = rng.choice([-1, 1], size=net.n_hidden)
    assert classical_clamped_energy(_negated(net), s, a, -h) == classical_clamped_energy(net, s, a, h)


def test_negation_symmetry_breaks_with_hidden_hidden_edges():
    # a hidden-hidden term is odd in its weight but even in the two spins
    net = zero_network(1, 1, [1, 1])
    net.weights[1][0, 0] = 1.0
    h = np.array([1, 1])
    assert classical_clamped_energy(net, [0], [0], h) == -1.0
    assert classical_clamped_energy(_negated(net), [0], [0], -h) == 1.0


@given(seed=st.integers(0, 2**31), which=st.integers(0, 200))
@settings(max_examples=60, deadline=None)
def test_energy_linear_in_each_weight(seed, which):
    # integer-valued parameters keep every sum exact in floating point
    rng = np.random.default_rng(seed)
    net = new_network(3, 5, [2, 2], seed)
    for p in net.parameters():
        p[...] = rng.integers(-4, 5, size=p.shape)
    s, a = random_clamp(rng, net)
    h = rng.choice([-1, 1], size=net.n_hidden)
    params = net.parameters()
    sizes = np.cumsum([p.size for p in params])
    k = int(np.searchsorted(sizes, which % sizes[-1], side="right"))
    idx = (which % sizes[-1]) - (sizes[k - 1] if k else 0)
    flat = params[k].reshape(-1)
    energies = []
    for step in range(3):
        energies.append(classical_clamped_energy(net, s, a, h))
        flat[idx] += 1.0
    assert energies[1] - energies[0] == energies[2] - energies[1]


def test_copy_weights_examples():
    src, dst = new_network(7, 5, [4, 4, 4], 1), new_network(7, 5, [4, 4, 4], 2)
    assert src.fingerprint() != dst.fingerprint()
    copy_weights(src, dst)
    for p, q in zip(src.parameters(), dst.parameters()):
        np.testing.assert_array_equal(p, q)
    assert dst.fingerprint() == src.fingerprint()
    before = dst.fingerprint()
    src.weights[1][0, 0] += 1.0
    assert dst.fingerprint() == before


def test_copy_weights_topology_mismatch():
    with pytest.raises(TopologyError):
        copy_weights(new_network(7, 5, [4, 4, 4], 1), new_network(7, 5, [4, 4], 1))


def test_checkpoint_round_trip(tmp_path, fig1_net):
    path = tmp_path / "net.txt"
    save_network(fig1_net, path)
    back = load_network(path)
    assert back.layer_sizes == fig1_net.layer_sizes
    assert back.fingerprint() == fig1_net.fingerprint()


def test_checkpoint_line_format(tiny_net):
    lines = dumps_network(tiny_net).splitlines()
    assert lines[0] == "state.0-hidden1.0 = 0.5"
    assert "hidden1.0-action.0 = 0.0" in lines
    assert "hidden1.0-hidden1.0 = 0.0" in lines
    assert len(lines) == 5


def test_checkpoint_errors(tiny_net):
    with pytest.raises(ValueError, match="line 2"):
        loads_network("state.0-hidden1.0 = 0.5\nnonsense\n")
    text = dumps_network(tiny_net).replace("hidden1.0-action.0", "state.0-action.0")
    with pytest.raises(TopologyError):
        loads_network(text)
