import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbmrl.hamiltonian import (build_effective_hamiltonian, build_hamiltonian_batch,
                               transverse_coupling)
from qbmrl.network import classical_clamped_energy, new_network, zero_network
from qbmrl.oracle import all_configurations

from .conftest import random_clamp


def test_r1_gamma0_matches_classical_energy(rng, fig1_net):
    s, a = random_clamp(rng, fig1_net)
    h = build_effective_hamiltonian(fig1_net, s, a, r=1, gamma=0.0)
    configs = all_configurations(h.n_spins)
    eff = h.energy(configs)
    classical = np.array([classical_clamped_energy(fig1_net, s, a, c) for c in configs])
    np.testing.assert_allclose(eff, classical, rtol=0, atol=1e-12)


def test_r1_with_field_shifts_by_constant(rng, fig1_net):
    s, a = random_clamp(rng, fig1_net)
    h = build_effective_hamiltonian(fig1_net, s, a, r=1, gamma=0.7)
    configs = all_configurations(h.n_spins)[::97]
    diff = h.energy(configs) - np.array([classical_clamped_energy(fig1_net, s, a, c) for c in configs])
    np.testing.assert_allclose(diff, -0.7 * h.n_hidden, atol=1e-12)


def test_clamped_weight_spread_over_replicas():
    net = zero_network(1, 1, [1])
    net.weights[0][0, 0] = 1.0
    h = build_effective_hamiltonian(net, [1], [0], r=4, gamma=1.0)
    assert h.n_spins == 4
    assert list(h.fields) == [0.25] * 4


def test_literal_inter_replica_coupling():
    net = new_network(3, 5, [2, 3], 0)
    h = build_effective_hamiltonian(net, [1, 0, 1], [0, 1, 0, 0, 0], r=2, gamma=2.0)
    a, b = h.inter_edges()
    assert a.size == h.n_hidden
    for i, j in zip(a, b):
        assert h.couplings[(i, j)] == 2.0


def test_suzuki_trotter_coupling_value():
    gamma, beta, r = 0.8, 1.5, 4
    expected = 0.5 / beta * math.log(math.cosh(gamma * beta / r) / math.sinh(gamma * beta / r))
    assert transverse_coupling(gamma, beta, r, "suzuki_trotter") == pytest.approx(expected, rel=1e-14)
    net = new_network(2, 5, [3], 0)
    h = build_effective_hamiltonian(net, [1, 1], np.eye(5)[2], r=r, gamma=gamma, beta=beta,
                                    coupling_mode="suzuki_trotter")
    assert h.j_perp == pytest.approx(expected, rel=1e-14)


def test_invalid_arguments():
    net = new_network(2, 5, [3], 0)
    s, a = [1, 0], np.eye(5)[0]
    with pytest.raises(ValueError):
        build_effective_hamiltonian(net, s, a, r=0)
    with pytest.raises(ValueError):
        build_effective_hamiltonian(net, s, a, r=2, gamma=-1.0)
    with pytest.raises(ValueError):
        build_effective_hamiltonian(net, s, a, r=2, beta=0.0)
    with pytest.raises(ValueError):
        build_effective_hamiltonian(net, s, a, r=2, coupling_mode="bogus")


@given(seed=st.integers(0, 2**31), r=st.integers(1, 5), gamma=st.floats(0, 5))
@settings(max_examples=50, deadline=None)
def test_coupling_structure(seed, r, gamma):
    rng = np.random.default_rng(seed)
    net = new_network(3, 5, [2, 3, 2], seed)
    s, a = random_clamp(rng, net)
    h = build_effective_hamiltonian(net, s, a, r=r, gamma=gamma)
    c = h.couplings
    assert all(c[(j, i)] == w for (i, j), w in c.items())
    assert all(i != j for i, j in c)
    nh = h.n_hidden
    for (i, j) in c:
        hi, ki = i % nh, i // nh
        hj, kj = j % nh, j // nh
        if ki != kj:
            assert hi == hj
            assert (ki - kj) % r in (1, r - 1)
    hi, hj, hw = net.hidden_edges()
    for e, w in zip(zip(hi, hj), hw):
        per_replica = [c[(k * nh + e[0], k * nh + e[1])] for k in range(r)] if r > 2 else None
        if per_replica is not None:
            assert all(x == w / r for x in per_replica)
            assert math.fsum(per_replica) == pytest.approx(w, abs=1e-15)


def test_intra_replica_weights_sum_back_exactly():
    net = new_network(3, 5, [4, 4], 5)
    for r in (1, 2, 4, 8):
        h = build_effective_hamiltonian(net, [1, 0, 1], np.eye(5)[1], r=r, gamma=0.3)
        per_edge = h.edge_w.reshape(r, -1)
        # r is a power of two, so w / r is exact and an exact sum recovers w bit for bit
        recovered = [math.fsum(per_edge[:, e]) for e in range(per_edge.shape[1])]
        np.testing.assert_array_equal(recovered, net.hidden_edges()[2])


def test_batch_matches_single(rng):
    net = new_network(4, 5, [3, 3], 9)
    clamps = [random_clamp(rng, net) for _ in range(6)]
    batch = build_hamiltonian_batch(net, [np.concatenate(c) for c in clamps], r=3, gamma=0.4)
    spins = rng.choice([-1, 1], size=(6, 5, batch.n_spins)).astype(np.int8)
    energies = batch.energies(spins)
    for q, (s, a) in enumerate(clamps):
        h = build_effective_hamiltonian(net, s, a, r=3, gamma=0.4)
        np.testing.assert_array_equal(h.fields, batch[q].fields)
        np.testing.assert_allclose(h.energy(spins[q]), energies[q], atol=1e-12)
