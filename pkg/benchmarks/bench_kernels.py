"""Compare the compiled and numpy interference kernels.

Usage: python benchmarks/bench_kernels.py [--points N] [--repeat R]
"""
import argparse
import timeit

import numpy as np

from eitrevival import kernels


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(0)
    theta = rng.uniform(0, 200, args.points)
    coeffs = rng.dirichlet(np.ones(7))  # seven diagonal coherences, harmonics -6..6
    h0 = -6

    results = {}
    for name, func in kernels.BACKENDS.items():
        best = min(timeit.repeat(lambda: func(theta, coeffs, h0), number=1, repeat=args.repeat))
        results[name] = (best, func(theta, coeffs, h0))
        print(f"{name:>7}: {best * 1e3:8.2f} ms  ({args.points / best / 1e6:.1f} Mpt/s)")

    if len(results) > 1:
        (t_py, y_py), (t_cy, y_cy) = results["python"], results["cython"]
        print(f"speedup: {t_py / t_cy:.1f}x, max |diff| = {np.max(np.abs(y_py - y_cy)):.2e}")
    else:
        print("compiled extension not available; only the fallback was timed")


if __name__ == "__main__":
    main()
