import numpy as np
import pytest

from qbmrl.network import new_network, zero_network


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_net():
    """1 state, 1 hidden, 1 action with hand-set weights."""
    net = zero_network(1, 1, [1])
    net.weights[0][0, 0] = 0.5
    return net


@pytest.fixture
def fig1_net():
    return new_network(7, 5, [4, 4, 4], seed=3)


def random_clamp(rng, net):
    state = (rng.random(net.state_size) < 0.5).astype(float)
    action = np.zeros(net.action_size)
    action[rng.integers(net.action_size)] = 1.0
    return state, action
