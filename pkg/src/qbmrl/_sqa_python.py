"""Pure numpy fallback for the annealing kernel.

Vectorized across chains (query x read); the spin loop itself stays
sequential. Consumes random numbers in exactly the same order as the
compiled kernel so both backends agree spin for spin.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(n) for n in (30, 27, 31, 11))
_TO_UNIT = 1.0 / 9007199254740992.0


def _uniform(state):
    """Advance every SplitMix64 stream in ``state`` once; return doubles in [0, 1)."""
    state += _GOLDEN
    z = state ^ (state >> _S30)
    z *= _MIX1
    z ^= z >> _S27
    z *= _MIX2
    z ^= z >> _S31
    return (z >> _S11).astype(np.float64) * _TO_UNIT


def anneal(nbr_index, nbr_weight, degree, fields, n_hidden, n_replicas,
           jperp, temperature, seeds, random_order, out):
    n_queries, n_reads, n_spins = out.shape
    n_chains = n_queries * n_reads
    rows = np.arange(n_chains)
    state = np.repeat(np.asarray(seeds, dtype=np.uint64), n_reads)
    state += np.tile(np.arange(n_reads, dtype=np.uint64), n_queries)
    chain_fields = np.repeat(np.asarray(fields, dtype=np.float64), n_reads, axis=0)
    max_deg = nbr_index.shape[1]

    s = np.empty((n_chains, n_spins), dtype=np.float64)
    for i in range(n_spins):
        s[:, i] = np.where(_uniform(state) < 0.5, 1.0, -1.0)

    with np.errstate(over="ignore"):
        for sweep in range(len(jperp)):
            jp = float(jperp[sweep])
            if random_order:
                perm = np.tile(np.arange(n_spins), (n_chains, 1))
                for i in range(n_spins - 1, 0, -1):
                    j = (_uniform(state) * (i + 1)).astype(np.intp)
                    swapped = perm[rows, j]
                    perm[rows, j] = perm[:, i]
                    perm[:, i] = swapped
            for pos in range(n_spins):
                if random_order:
                    i = perm[:, pos]
                    field = chain_fields[rows, i]
                    for d in range(max_deg):
                        field = field + nbr_weight[i, d] * s[rows, nbr_index[i, d]]
                else:
                    i = pos
                    field = chain_fields[:, i].copy()
                    for d in range(degree[i]):
                        field = field + nbr_weight[i, d] * s[:, nbr_index[i, d]]
                if n_replicas >= 2:
                    k = i // n_hidden
                    h = i - k * n_hidden
                    if n_replicas == 2:
                        field = field + jp * s[rows, (1 - k) * n_hidden + h]
                    else:
                        left = ((k + n_replicas - 1) % n_replicas) * n_hidden + h
                        right = ((k + 1) % n_replicas) * n_hidden + h
                        field = field + jp * s[rows, left]
                        field = field + jp * s[rows, right]
                p = 1.0 / (1.0 + np.exp(-2.0 * field / temperature))
                new = np.where(_uniform(state) < p, 1.0, -1.0)
                if random_order:
                    s[rows, i] = new
                else:
                    s[:, i] = new

    out[...] = s.reshape(n_queries, n_reads, n_spins).astype(np.int8)
