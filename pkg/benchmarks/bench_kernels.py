"""Time the numba kernels against the pure-numpy fallback.

Run twice to see both paths, or let this script do it for you by
re-execing itself with ICUT_NO_NUMBA=1:

    python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np


def bench(label, fn, repeats=3):
    fn()  # warm-up (numba compilation; page-in for numpy)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    print(f"  {label:<28s} {best * 1e3:9.2f} ms")
    return best


def main():
    from icut import kernels

    path = "numba" if kernels.NUMBA_ENABLED else "numpy"
    print(f"[{path} path]")
    rng = np.random.default_rng(0)

    n, d, k = 8000, 32, 20
    X = rng.standard_normal((n, d))
    rank = np.arange(n)
    bench(f"neighbor_table n={n} d={d}", lambda: kernels.neighbor_table(X, rank, k))

    n1, d1 = 8000, 1
    X1 = rng.standard_normal((n1, d1))
    bench(f"neighbor_table n={n1} d={d1}", lambda: kernels.neighbor_table(X1, np.arange(n1), k))

    m, dh, count = 10000, 16, 4000
    H = rng.standard_normal((m, dh))
    mu = H.mean(axis=0)
    bench(f"herding n={m} d={dh} m={count}", lambda: kernels.herding_greedy(H, mu, count))


if __name__ == "__main__":
    main()
    if not os.environ.get("ICUT_NO_NUMBA"):
        env = dict(os.environ, ICUT_NO_NUMBA="1")
        subprocess.run([sys.executable, os.path.abspath(__file__)], env=env, check=True)
