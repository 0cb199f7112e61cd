# cython: language_level=3
"""Compiled single-spin-flip annealing kernel.

Must stay draw-for-draw identical to :mod:`qbmrl._sqa_python`; the test
suite checks both backends produce the same spins for the same seeds.
"""
from libc.math cimport exp
from libc.stdint cimport int8_t, int32_t, uint64_t
from libc.stdlib cimport free, malloc


cdef inline uint64_t _splitmix_next(uint64_t* state) noexcept nogil:
    cdef uint64_t z
    state[0] += 0x9E3779B97F4A7C15ULL
    z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t* state) noexcept nogil:
    return <double>(_splitmix_next(state) >> 11) * (1.0 / 9007199254740992.0)


def anneal(
    const int32_t[:, ::1] nbr_index,
    const double[:, ::1] nbr_weight,
    const int32_t[::1] degree,
    const double[:, ::1] fields,
    int n_hidden,
    int n_replicas,
    const double[::1] jperp,
    double temperature,
    const uint64_t[::1] seeds,
    bint random_order,
    int8_t[:, :, ::1] out,
):
    """Run ``out.shape[1]`` independent anneals for every row of ``fields``.

    Spins are written into ``out`` (queries, reads, spins) as +1/-1.
    """
    cdef Py_ssize_t n_queries = out.shape[0]
    cdef Py_ssize_t n_reads = out.shape[1]
    cdef Py_ssize_t n_spins = out.shape[2]
    cdef Py_ssize_t num_sweeps = jperp.shape[0]
    cdef Py_ssize_t q, read, sweep, pos, i, j, d, k, h, tmp
    cdef uint64_t state
    cdef int8_t* s
    cdef double field, jp, p
    cdef Py_ssize_t* perm = <Py_ssize_t*>malloc(max(n_spins, 1) * sizeof(Py_ssize_t))
    if perm == NULL:
        raise MemoryError()
    try:
        with nogil:
            for q in range(n_queries):
                for read in range(n_reads):
                    state = seeds[q] + <uint64_t>read
                    s = &out[q, read, 0]
                    for i in range(n_spins):
                        s[i] = 1 if _uniform(&state) < 0.5 else -1
                    for sweep in range(num_sweeps):
                        jp = jperp[sweep]
                        if random_order:
                            for i in range(n_spins):
                                perm[i] = i
                            for i in range(n_spins - 1, 0, -1):
                                j = <Py_ssize_t>(_uniform(&state) * (i + 1))
                                tmp = perm[i]
                                perm[i] = perm[j]
                                perm[j] = tmp
                        for pos in range(n_spins):
                            i = perm[pos] if random_order else pos
                            field = fields[q, i]
                            for d in range(degree[i]):
                                field = field + nbr_weight[i, d] * s[nbr_index[i, d]]
                            if n_replicas == 2:
                                k = i // n_hidden
                                h = i - k * n_hidden
                                field = field + jp * s[(1 - k) * n_hidden + h]
                            elif n_replicas > 2:
                                k = i // n_hidden
                                h = i - k * n_hidden
                                field = field + jp * s[((k + n_replicas - 1) % n_replicas) * n_hidden + h]
                                field = field + jp * s[((k + 1) % n_replicas) * n_hidden + h]
                            p = 1.0 / (1.0 + exp(-2.0 * field / temperature))
                            s[i] = 1 if _uniform(&state) < p else -1
    finally:
        free(perm)
