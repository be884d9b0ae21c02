"""Benchmark the compiled wedge-angle kernel against the NumPy fallback.

Run as: python benchmarks/bench_angle_kernel.py [--sizes 50,100,200,400]
The kernel is the O(n^3) hot spot of the test statistic; everything else in
the pipeline is linear algebra at O(n^2) or below.
"""

import argparse
import time

import numpy as np

from flmgof import _angles_cy, _angles_np


def time_kernel(fn, xprime, tol, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(xprime, tol)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="50,100,200,400")
    parser.add_argument("--p", type=int, default=5)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'n':>6} {'cython (ms)':>12} {'numpy (ms)':>12} {'speedup':>8} {'max|diff|':>10}")
    for n in (int(s) for s in args.sizes.split(",")):
        xprime = rng.standard_normal((n, args.p))
        tol = 1e-12 * (xprime.max() - xprime.min())
        repeats = max(1, args.repeats if n <= 200 else args.repeats // 2)
        t_cy = time_kernel(_angles_cy.angle_sums_packed, xprime, tol, repeats)
        t_np = time_kernel(_angles_np.angle_sums_packed, xprime, tol, repeats)
        diff = np.max(np.abs(
            _angles_cy.angle_sums_packed(xprime, tol)
            - _angles_np.angle_sums_packed(xprime, tol)
        ))
        print(f"{n:>6} {t_cy * 1e3:>12.2f} {t_np * 1e3:>12.2f} {t_np / t_cy:>8.2f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
