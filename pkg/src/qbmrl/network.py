"""Layered Boltzmann machine used as the Q-function approximator.

Layers are ordered ``state, hidden1, ..., hiddenL, action``. Each adjacent
pair is fully connected and nothing else is: the state layer only touches
the first hidden layer and the action layer only touches the last one.
Biases are the self-weights ``w_ii`` of the Hopfield energy.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class TopologyError(ValueError):
    """Raised for empty layers or mismatched network layouts."""


class DimensionError(ValueError):
    """Raised when clamped vectors do not fit the network's visible layers."""


@dataclass
class QbmNetwork:
    state_size: int
    action_size: int
    hidden_layout: tuple[int, ...]
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.state_size, *self.hidden_layout, self.action_size]

    @property
    def layer_names(self) -> list[str]:
        hidden = [f"hidden{k + 1}" for k in range(len(self.hidden_layout))]
        return ["state", *hidden, "action"]

    @property
    def n_hidden(self) -> int:
        return int(sum(self.hidden_layout))

    @property
    def n_visible(self) -> int:
        return self.state_size + self.action_size

    @property
    def n_edges(self) -> int:
        return int(sum(w.size for w in self.weights))

    @property
    def n_biases(self) -> int:
        return int(sum(b.size for b in self.biases))

    @property
    def hidden_offsets(self) -> np.ndarray:
        """Start index of each hidden layer in the flat hidden numbering."""
        return np.concatenate([[0], np.cumsum(self.hidden_layout)]).astype(int)

    def hidden_edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flat hidden-node pairs ``(i, j)`` with their weights, layer by layer."""
        offs = self.hidden_offsets
        rows, cols, vals = [], [], []
        for k in range(len(self.hidden_layout) - 1):
            w = self.weights[k + 1]
            a, b = np.meshgrid(np.arange(w.shape[0]), np.arange(w.shape[1]), indexing="ij")
            rows.append(a.ravel() + offs[k])
            cols.append(b.ravel() + offs[k + 1])
            vals.append(w.ravel())
        if not rows:
            empty = np.zeros(0, dtype=int)
            return empty, empty, np.zeros(0)
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)

    def visible_hidden_matrix(self) -> np.ndarray:
        """Dense ``(n_visible, n_hidden)`` coupling between clamped units and hidden nodes."""
        offs = self.hidden_offsets
        m = np.zeros((self.n_visible, self.n_hidden))
        m[: self.state_size, offs[0]: offs[1]] = self.weights[0]
        m[self.state_size:, offs[-2]: offs[-1]] = self.weights[-1].T
        return m

    @property
    def hidden_bias(self) -> np.ndarray:
        return np.concatenate(self.biases[1:-1])

    @property
    def visible_bias(self) -> np.ndarray:
        return np.concatenate([self.biases[0], self.biases[-1]])

    def parameters(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self) -> QbmNetwork:
        return QbmNetwork(
            self.state_size,
            self.action_size,
            tuple(self.hidden_layout),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def fingerprint(self) -> str:
        digest = hashlib.sha256(repr(self.layer_sizes).encode())
        for p in self.parameters():
            digest.update(np.ascontiguousarray(p, dtype=np.float64).tobytes())
        return digest.hexdigest()

    def same_topology(self, other: QbmNetwork) -> bool:
        return self.layer_sizes == other.layer_sizes


def new_network(state_size: int, action_size: int, hidden_layout, seed: int) -> QbmNetwork:
    """Create a network with every weight and bias drawn from N(0, 1)."""
    hidden_layout = tuple(int(n) for n in hidden_layout)
    sizes = [int(state_size), *hidden_layout, int(action_size)]
    if not hidden_layout or min(sizes) < 1:
        raise TopologyError(f"every layer needs at least one unit, got {sizes}")
    rng = np.random.default_rng(seed)
    weights = [rng.standard_normal((a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
    biases = [rng.standard_normal(n) for n in sizes]
    return QbmNetwork(sizes[0], sizes[-1], hidden_layout, weights, biases)


def zero_network(state_size: int, action_size: int, hidden_layout) -> QbmNetwork:
    net = new_network(state_size, action_size, hidden_layout, seed=0)
    for p in net.parameters():
        p[...] = 0.0
    return net


def _check_visible(net: QbmNetwork, state, action) -> tuple[np.ndarray, np.ndarray]:
    state = np.asarray(state, dtype=np.float64)
    action = np.asarray(action, dtype=np.float64)
    if state.shape != (net.state_size,) or action.shape != (net.action_size,):
        raise DimensionError(
            f"expected state/action of length {net.state_size}/{net.action_size}, "
            f"got {state.shape}/{action.shape}"
        )
    return state, action


def classical_clamped_energy(net: QbmNetwork, state, action, hidden) -> float:
    """Hopfield energy of a hidden assignment with the visible units clamped.

    ``state`` and ``action`` are 0/1 indicator vectors, ``hidden`` holds +1/-1
    spins in flat hidden order.
    """
    state, action = _check_visible(net, state, action)
    hidden = np.asarray(hidden, dtype=np.float64)
    if hidden.shape != (net.n_hidden,):
        raise DimensionError(f"expected {net.n_hidden} hidden spins, got {hidden.shape}")
    offs = net.hidden_offsets
    layers = [hidden[offs[k]: offs[k + 1]] for k in range(len(net.hidden_layout))]
    energy = -(net.biases[0] @ state) - (net.biases[-1] @ action)
    energy -= net.hidden_bias @ hidden
    energy -= state @ net.weights[0] @ layers[0]
    for k in range(len(layers) - 1):
        energy -= layers[k] @ net.weights[k + 1] @ layers[k + 1]
    energy -= layers[-1] @ net.weights[-1] @ action
    return float(energy)


def copy_weights(source: QbmNetwork, target: QbmNetwork) -> QbmNetwork:
    """Overwrite ``target``'s parameters with an independent copy of ``source``'s."""
    if not source.same_topology(target):
        raise TopologyError(
            f"cannot copy {source.layer_sizes} weights into {target.layer_sizes} network"
        )
    for dst, src in zip(target.parameters(), source.parameters()):
        dst[...] = src
    return target


# -- checkpoint format -------------------------------------------------------
# One ``layerA.nodeI-layerB.nodeJ = value`` entry per line; biases are written
# as self-edges ``layer.i-layer.i``.

_ENTRY = re.compile(r"^(\w+)\.(\d+)-(\w+)\.(\d+)\s*=\s*(\S+)$")


def dumps_network(net: QbmNetwork) -> str:
    names = net.layer_names
    lines = []
    for k, w in enumerate(net.weights):
        for i in range(w.shape[0]):
            for j in range(w.shape[1]):
                lines.append(f"{names[k]}.{i}-{names[k + 1]}.{j} = {float(w[i, j])!r}")
    for k, b in enumerate(net.biases):
        for i, value in enumerate(b):
            lines.append(f"{names[k]}.{i}-{names[k]}.{i} = {float(value)!r}")
    return "\n".join(lines) + "\n"


def loads_network(text: str) -> QbmNetwork:
    entries = {}
    sizes: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _ENTRY.match(line)
        if m is None:
            raise ValueError(f"line {lineno}: cannot parse network entry {raw!r}")
        la, i, lb, j, value = m.groups()
        i, j = int(i), int(j)
        entries[(la, i, lb, j)] = float(value)
        sizes[la] = max(sizes.get(la, 0), i + 1)
        sizes[lb] = max(sizes.get(lb, 0), j + 1)
    n_layers = sum(1 for name in sizes if name.startswith("hidden"))
    if "state" not in sizes or "action" not in sizes or n_layers == 0:
        raise TopologyError("checkpoint lacks state, action or hidden layers")
    hidden = tuple(sizes[f"hidden{k + 1}"] for k in range(n_layers))
    net = zero_network(sizes["state"], sizes["action"], hidden)
    names = net.layer_names
    expected = net.n_edges + net.n_biases
    if len(entries) != expected:
        raise TopologyError(f"checkpoint has {len(entries)} entries, layout needs {expected}")
    try:
        for k, w in enumerate(net.weights):
            for i in range(w.shape[0]):
                for j in range(w.shape[1]):
                    w[i, j] = entries[(names[k], i, names[k + 1], j)]
        for k, b in enumerate(net.biases):
            for i in range(b.size):
                b[i] = entries[(names[k], i, names[k], i)]
    except KeyError as exc:
        raise TopologyError(f"checkpoint entry missing or off-topology: {exc}") from None
    return net


def save_network(net: QbmNetwork, path) -> None:
    Path(path).write_text(dumps_network(net))


def load_network(path) -> QbmNetwork:
    return loads_network(Path(path).read_text())
