"""Benchmark: compiled extension vs pure-NumPy fallback on the hot kernels.

Run as ``python benchmarks/bench_backends.py``.  Exercises the three
operations both backends implement -- weighted kernel-power reductions
(the inner loop of every disk quadrature), the deterministic pairwise sum,
and greedy farthest-point lattice thinning -- on workloads matching the
default quadrature scheme, and prints one table of timings.
"""

import math
import time

import numpy as np

from bergmanlab._fastpath import reference

try:
    from bergmanlab._fastpath import _speedups
except ImportError:
    _speedups = None


def timeit(fn, *args, repeat=3, **kwargs):
    best = math.inf
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    rng = np.random.default_rng(0)
    n_nodes = 24 * 16 * 256            # default scheme size
    nodes = (0.999 * np.sqrt(rng.uniform(0, 1, n_nodes))
             * np.exp(2j * np.pi * rng.uniform(0, 1, n_nodes)))
    weights = rng.uniform(0, 1, n_nodes)
    zs = (0.95 * np.sqrt(rng.uniform(0, 1, 256))
          * np.exp(2j * np.pi * rng.uniform(0, 1, 256)))
    big = rng.normal(size=2_000_001)
    cands = (0.995 * np.sqrt(rng.uniform(0, 1, 25_000))
             * np.exp(2j * np.pi * rng.uniform(0, 1, 25_000)))
    cands[0] = 0.0
    rho = math.tanh(0.3)

    cases = [
        ("kernel sums |.|^-4, 98k nodes x 256 z",
         lambda b: b.kernel_weighted_sums(nodes, weights, zs, 4.0, True)),
        ("kernel sums cplx^-2, 98k nodes x 256 z",
         lambda b: b.kernel_weighted_sums(nodes, weights, zs, 2.0, False)),
        ("pairwise sum, 2M doubles",
         lambda b: b.pairwise_sum(big)),
        ("greedy farthest, 25k candidates",
         lambda b: b.greedy_farthest(cands, rho)),
    ]

    print(f"{'case':42s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, run in cases:
        t_ref, ref_out = timeit(run, reference)
        if _speedups is None:
            print(f"{name:42s} {t_ref * 1e3:9.1f}ms {'n/a':>10s} {'':>8s}")
            continue
        t_fast, fast_out = timeit(run, _speedups)
        a, b = np.atleast_1d(ref_out), np.atleast_1d(fast_out)
        if np.iscomplexobj(a) or a.dtype.kind == "f":
            scale = np.max(np.abs(a)) or 1.0
            agree = np.max(np.abs(a - b)) / scale < 1e-12
        else:
            agree = np.array_equal(a, b)
        mark = "" if agree else "  << MISMATCH"
        print(f"{name:42s} {t_ref * 1e3:9.1f}ms {t_fast * 1e3:9.1f}ms "
              f"{t_ref / t_fast:7.1f}x{mark}")
    if _speedups is None:
        print("\ncompiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
