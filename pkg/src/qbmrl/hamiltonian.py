"""Clamped, replica-stacked effective Hamiltonian of a QBM.

Spins are the hidden nodes copied ``r`` times; spin ``(h, k)`` (hidden node
``h`` in replica ``k``) sits at flat index ``k * n_hidden + h``. The energy is

    H(s) = offset - sum_i fields_i s_i - sum_(i,j) J_ij s_i s_j
           - J_perp * sum_(h, k) s_(h,k) s_(h,k+1)

with the replica chain closed into a ring. Intra-replica fields and
couplings are the network weights divided by ``r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .network import QbmNetwork, _check_visible

COUPLING_MODES = ("literal", "suzuki_trotter")


def transverse_coupling(gamma: float, beta: float, n_replicas: int, mode: str = "literal") -> float:
    """Inter-replica coupling strength for a transverse field ``gamma``.

    ``literal`` uses ``gamma`` itself; ``suzuki_trotter`` uses the
    path-integral mapping ``ln(coth(gamma * beta / r)) / (2 * beta)``.
    """
    if mode == "literal":
        return float(gamma)
    if mode == "suzuki_trotter":
        if gamma <= 0.0:
            return math.inf
        x = gamma * beta / n_replicas
        return 0.5 / beta * math.log(1.0 / math.tanh(x))
    raise ValueError(f"unknown coupling mode {mode!r}; expected one of {COUPLING_MODES}")


def replica_edges(n_hidden: int, n_replicas: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct ring bonds between copies of the same hidden node."""
    if n_replicas < 2:
        empty = np.zeros(0, dtype=int)
        return empty, empty
    h = np.arange(n_hidden)
    n_bonds = 1 if n_replicas == 2 else n_replicas
    a = np.concatenate([k * n_hidden + h for k in range(n_bonds)])
    b = np.concatenate([((k + 1) % n_replicas) * n_hidden + h for k in range(n_bonds)])
    return a, b


@dataclass(frozen=True, eq=False)
class _Structure:
    n_hidden: int
    n_replicas: int
    edge_i: np.ndarray
    edge_j: np.ndarray
    edge_w: np.ndarray
    hidden_edges: np.ndarray
    gamma: float
    beta: float
    coupling_mode: str
    j_perp: float

    @property
    def n_spins(self) -> int:
        return self.n_hidden * self.n_replicas

    def spin_index(self, hidden: int, replica: int) -> int:
        return replica * self.n_hidden + hidden

    def inter_edges(self) -> tuple[np.ndarray, np.ndarray]:
        return replica_edges(self.n_hidden, self.n_replicas)

    @property
    def replica_offset(self) -> float:
        # r = 1: the ring term is s*s = 1 per node, a constant
        if self.n_replicas == 1 and math.isfinite(self.j_perp):
            return -self.j_perp * self.n_hidden
        return 0.0

    @property
    def couplings(self) -> dict[tuple[int, int], float]:
        """Symmetric map of every pairwise coupling, inter-replica bonds included."""
        out: dict[tuple[int, int], float] = {}
        pairs = [zip(self.edge_i.tolist(), self.edge_j.tolist(), self.edge_w.tolist())]
        a, b = self.inter_edges()
        pairs.append(zip(a.tolist(), b.tolist(), [self.j_perp] * len(a)))
        for group in pairs:
            for i, j, w in group:
                out[(i, j)] = out.get((i, j), 0.0) + w
                out[(j, i)] = out[(i, j)]
        return out

    def coupling_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Padded intra-replica neighbour lists ``(index, weight, degree)`` for the kernels."""
        src = np.concatenate([self.edge_i, self.edge_j])
        dst = np.concatenate([self.edge_j, self.edge_i])
        w = np.concatenate([self.edge_w, self.edge_w])
        order = np.argsort(src, kind="stable")
        src, dst, w = src[order], dst[order], w[order]
        degree = np.bincount(src, minlength=self.n_spins).astype(np.int32)
        max_deg = max(int(degree.max()) if degree.size else 0, 1)
        starts = np.concatenate([[0], np.cumsum(degree)[:-1]])
        slot = np.arange(src.size) - starts[src]
        index = np.tile(np.arange(self.n_spins, dtype=np.int32)[:, None], (1, max_deg))
        weight = np.zeros((self.n_spins, max_deg))
        index[src, slot] = dst
        weight[src, slot] = w
        return np.ascontiguousarray(index, dtype=np.int32), weight, degree

    def _pair_energy(self, spins: np.ndarray) -> np.ndarray:
        s = spins.astype(np.float64)
        e = -(s[..., self.edge_i] * s[..., self.edge_j]) @ self.edge_w
        a, b = self.inter_edges()
        if a.size:
            e = e - self.j_perp * (s[..., a] * s[..., b]).sum(axis=-1)
        return e


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonian(_Structure):
    fields: np.ndarray = None
    clamp_offset: float = 0.0

    @property
    def offset(self) -> float:
        return self.clamp_offset + self.replica_offset

    def energy(self, spins) -> np.ndarray | float:
        """Energy of one configuration or of a stack of them (last axis = spins)."""
        s = np.asarray(spins)
        e = self.offset - s.astype(np.float64) @ self.fields + self._pair_energy(s)
        return float(e) if np.ndim(e) == 0 else e

    def with_gamma(self, gamma: float) -> EffectiveHamiltonian:
        jp = transverse_coupling(gamma, self.beta, self.n_replicas, self.coupling_mode)
        return replace(self, gamma=float(gamma), j_perp=jp)

    def as_batch(self) -> HamiltonianBatch:
        base = {f: getattr(self, f) for f in _Structure.__dataclass_fields__}
        return HamiltonianBatch(**base, fields=self.fields[None, :],
                                clamp_offsets=np.array([self.clamp_offset]))


@dataclass(frozen=True, eq=False)
class HamiltonianBatch(_Structure):
    """Several clamped Hamiltonians that share couplings and differ only in fields."""

    fields: np.ndarray = None
    clamp_offsets: np.ndarray = None

    def __len__(self) -> int:
        return self.fields.shape[0]

    def __getitem__(self, q: int) -> EffectiveHamiltonian:
        base = {f: getattr(self, f) for f in _Structure.__dataclass_fields__}
        return EffectiveHamiltonian(**base, fields=self.fields[q],
                                    clamp_offset=float(self.clamp_offsets[q]))

    def energies(self, spins: np.ndarray) -> np.ndarray:
        """Energies for spins shaped ``(queries, reads, n_spins)``."""
        s = spins.astype(np.float64)
        field_term = np.einsum("qrn,qn->qr", s, self.fields)
        offsets = (self.clamp_offsets + self.replica_offset)[:, None]
        return offsets - field_term + self._pair_energy(spins)


def _validate(r: int, gamma: float, beta: float, mode: str) -> None:
    if r < 1:
        raise ValueError(f"replica count must be >= 1, got {r}")
    if gamma < 0:
        raise ValueError(f"transverse field must be >= 0, got {gamma}")
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if mode not in COUPLING_MODES:
        raise ValueError(f"unknown coupling mode {mode!r}")
    if mode == "suzuki_trotter" and r > 1 and gamma == 0:
        raise ValueError("suzuki_trotter coupling diverges at gamma = 0")


def _structure(net: QbmNetwork, r: int, gamma: float, beta: float, mode: str) -> dict:
    hi, hj, hw = net.hidden_edges()
    nh = net.n_hidden
    shift = np.repeat(np.arange(r) * nh, hi.size)
    return dict(
        n_hidden=nh,
        n_replicas=r,
        edge_i=np.tile(hi, r) + shift,
        edge_j=np.tile(hj, r) + shift,
        edge_w=np.tile(hw / r, r),
        hidden_edges=np.stack([hi, hj], axis=1),
        gamma=float(gamma),
        beta=float(beta),
        coupling_mode=mode,
        j_perp=transverse_coupling(gamma, beta, r, mode),
    )


def build_hamiltonian_batch(net: QbmNetwork, visibles, r: int = 1, gamma: float = 0.0,
                            beta: float = 1.0, coupling_mode: str = "literal") -> HamiltonianBatch:
    """Clamp each row of ``visibles`` (state then action, 0/1) onto the network."""
    _validate(r, gamma, beta, coupling_mode)
    v = np.atleast_2d(np.asarray(visibles, dtype=np.float64))
    if v.shape[1] != net.n_visible:
        raise ValueError(f"visible rows must have length {net.n_visible}, got {v.shape[1]}")
    hidden_fields = (v @ net.visible_hidden_matrix() + net.hidden_bias) / r
    fields = np.tile(hidden_fields, (1, r))
    clamp_offsets = -(v @ net.visible_bias)
    return HamiltonianBatch(**_structure(net, r, gamma, beta, coupling_mode),
                            fields=np.ascontiguousarray(fields), clamp_offsets=clamp_offsets)


def build_effective_hamiltonian(net: QbmNetwork, state, action, r: int = 1, gamma: float = 0.0,
                                beta: float = 1.0, coupling_mode: str = "literal") -> EffectiveHamiltonian:
    state, action = _check_visible(net, state, action)
    batch = build_hamiltonian_batch(net, np.concatenate([state, action])[None, :], r, gamma,
                                    beta, coupling_mode)
    return batch[0]


def from_couplings(n_spins: int, fields, couplings: dict, offset: float = 0.0,
                   beta: float = 1.0) -> EffectiveHamiltonian:
    """Generic Ising system (one replica) from explicit fields and ``{(i, j): J}`` couplings.

    A pair may be listed in both orders as long as the values agree.

    Handy for oracle checks on hand-built spin systems.
    """
    pairs: dict[tuple[int, int], float] = {}
    for (i, j), w in couplings.items():
        if i == j:
            raise ValueError("self-couplings are not allowed")
        key = (min(i, j), max(i, j))
        if key in pairs and pairs[key] != float(w):
            raise ValueError(f"asymmetric coupling given for pair {key}")
        pairs[key] = float(w)
    ij = np.array(sorted(pairs), dtype=int).reshape(-1, 2)
    w = np.array([pairs[tuple(p)] for p in ij.tolist()], dtype=np.float64)
    return EffectiveHamiltonian(
        n_hidden=n_spins, n_replicas=1, edge_i=ij[:, 0], edge_j=ij[:, 1], edge_w=w,
        hidden_edges=ij.copy(), gamma=0.0, beta=float(beta), coupling_mode="literal",
        j_perp=0.0, fields=np.asarray(fields, dtype=np.float64), clamp_offset=float(offset),
    )
