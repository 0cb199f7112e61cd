"""Compare the compiled and pure-Python annealing kernels.

Times one training-sized batch (the five action queries of a minibatch)
per backend and checks that both return identical spins.

    python benchmarks/bench_sampler.py --sweeps 100 --replicas 1 2
"""

import argparse
import time

import numpy as np

from qbmrl.hamiltonian import build_hamiltonian_batch
from qbmrl.network import new_network
from qbmrl.sampler import AnnealSchedule, available_backends, sample_batch


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--state-size", type=int, default=15)
    parser.add_argument("--layout", type=int, nargs="+", default=[8])
    parser.add_argument("--queries", type=int, default=48, help="clamped Hamiltonians per batch")
    parser.add_argument("--reads", type=int, default=10)
    parser.add_argument("--sweeps", type=int, default=100)
    parser.add_argument("--replicas", type=int, nargs="+", default=[1, 2, 4])
    parser.add_argument("--random-order", action="store_true")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernel not built; only the Python fallback is available")
    rng = np.random.default_rng(0)
    net = new_network(args.state_size, 5, args.layout, seed=0)
    visibles = np.hstack([(rng.random((args.queries, args.state_size)) < 0.2).astype(float),
                          np.eye(5)[rng.integers(5, size=args.queries)]])
    seeds = np.arange(args.queries, dtype=np.uint64)
    schedule = AnnealSchedule(num_sweeps=args.sweeps, random_order=args.random_order)

    print(f"{'replicas':>8} {'spins':>6} " + " ".join(f"{b + ' ms':>12}" for b in backends) + f" {'speedup':>8}")
    for r in args.replicas:
        batch = build_hamiltonian_batch(net, visibles, r=r, gamma=schedule.gamma_final)
        timings, outputs = {}, {}
        for b in backends:
            timings[b], (outputs[b], _) = best_of(
                lambda b=b: sample_batch(batch, schedule, args.reads, seeds, backend=b), args.repeat)
        if len(outputs) == 2 and not np.array_equal(outputs["cython"], outputs["python"]):
            raise SystemExit(f"backends disagree at r={r}")
        speedup = timings["python"] / timings["cython"] if len(timings) == 2 else float("nan")
        print(f"{r:>8} {batch.n_spins:>6} " + " ".join(f"{1e3 * timings[b]:>12.1f}" for b in backends)
              + f" {speedup:>7.1f}x")


if __name__ == "__main__":
    main()
