"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot paths on realistic workloads: batched circuit
evaluation, gate-quotient sweeps and packed sparse-polynomial products.
Run directly:

    python benchmarks/backend_bench.py [--trials 200] [--repeat 5]

or force one backend for the whole process with CIRCFLAT_BACKEND=numpy.
"""

import argparse
import time

import numpy as np

from circflat import backends
from circflat.circuit import Circuit
from circflat.generators import random_multilinear
from circflat.normalize import normalized
from circflat.quotient import quotient_values_batch
from circflat.sparse import PackSpec


def _time(fn, repeat):
    fn()  # warm up (JIT compile on the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_eval(circuit: Circuit, trials: int, repeat: int):
    points = backends.random_point_batch(1, trials, circuit.n, circuit.field.p)
    return _time(lambda: circuit.eval_table(points), repeat)


def bench_quotient(circuit: Circuit, trials: int, repeat: int):
    points = backends.random_point_batch(2, trials, circuit.n, circuit.field.p)
    vals = circuit.eval_table(points)
    targets = list(range(0, circuit.num_gates, max(1, circuit.num_gates // 32)))

    def run():
        for v in targets:
            quotient_values_batch(circuit, v, vals)

    return _time(run, repeat)


def bench_polymul(nterms: int, repeat: int, p: int):
    rng = np.random.Generator(np.random.Philox(key=5))
    spec = PackSpec([3] * 16)
    ka = np.unique(rng.integers(0, 1 << 32, nterms, dtype=np.uint64))
    kb = np.unique(rng.integers(0, 1 << 32, nterms, dtype=np.uint64))
    ca = rng.integers(1, p, ka.shape[0], dtype=np.uint64)
    cb = rng.integers(1, p, kb.shape[0], dtype=np.uint64)
    assert spec.fits()
    return _time(lambda: backends.mul_packed(ka, ca, kb, cb, p), repeat)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=256, help="evaluation points per batch")
    ap.add_argument("--gates", type=int, default=400)
    ap.add_argument("--poly-terms", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    p = (1 << 61) - 1
    circuit = normalized(random_multilinear(args.gates, 16, seed=3))
    print(f"circuit: {circuit.num_gates} gates, {args.trials} points, p = 2^61 - 1")

    results = {}
    for backend in ("numpy", "numba"):
        backends.set_backend(backend)
        results[backend] = {
            "eval": bench_eval(circuit, args.trials, args.repeat),
            "quotient": bench_quotient(circuit, args.trials, args.repeat),
            "polymul": bench_polymul(args.poly_terms, args.repeat, p),
        }

    print(f"\n{'kernel':<10} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for kernel in ("eval", "quotient", "polymul"):
        a = results["numpy"][kernel]
        b = results["numba"][kernel]
        print(f"{kernel:<10} {a * 1e3:>10.2f}ms {b * 1e3:>10.2f}ms {a / b:>8.1f}x")


if __name__ == "__main__":
    main()
