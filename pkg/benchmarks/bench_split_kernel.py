"""Benchmark: compiled split-search kernels vs the numpy fallback.

Times the full boosting loop (identical algorithm, identical trees up to
float rounding) on synthetic matrices of increasing size.

Usage: python benchmarks/bench_split_kernel.py [--rows N] [--cols M] [--trees T]
"""

import argparse
import time

import numpy as np

from respews.gbdt import kernels
from respews.gbdt.train import GbdtParams, train_gbdt


def make_problem(rows: int, cols: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, cols))
    X[rng.uniform(size=X.shape) < 0.1] = np.nan
    logit = np.nan_to_num(X[:, 0]) + 0.7 * np.nan_to_num(X[:, 1]) - 0.2
    y = (rng.uniform(size=rows) < 1.0 / (1.0 + np.exp(-logit))).astype(np.int8)
    return X, y


def bench(impl_name: str, X, y, names, params) -> tuple[float, int]:
    n_valid = max(len(X) // 5, 50)
    t0 = time.perf_counter()
    model = train_gbdt(
        X[n_valid:], y[n_valid:], X[:n_valid], y[:n_valid], names, params, kernel=impl_name
    )
    return time.perf_counter() - t0, len(model.trees)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trees", type=int, default=40)
    parser.add_argument("--leaves", type=int, default=32)
    parser.add_argument("--sizes", type=str, default="2000x50,10000x100,30000x250")
    args = parser.parse_args()

    if kernels.KERNEL_IMPL != "compiled":
        print("note: compiled kernels unavailable; benchmarking fallback only")
    params = GbdtParams(
        max_trees=args.trees, learning_rate=0.1, max_leaves=args.leaves,
        min_child_samples=20, patience=0,
    )
    print(f"{'size':>14} {'impl':>9} {'trees':>6} {'seconds':>9} {'trees/s':>9} {'speedup':>8}")
    for size in args.sizes.split(","):
        rows, cols = (int(v) for v in size.split("x"))
        X, y = make_problem(rows, cols)
        names = [f"f{i}" for i in range(cols)]
        timings = {}
        impls = ["fallback"] + (["compiled"] if kernels.KERNEL_IMPL == "compiled" else [])
        for impl in impls:
            seconds, n_trees = bench(impl, X, y, names, params)
            timings[impl] = seconds
            speedup = timings["fallback"] / seconds if impl == "compiled" else 1.0
            print(f"{rows:>8}x{cols:<5} {impl:>9} {n_trees:>6} {seconds:>9.2f} "
                  f"{n_trees / seconds:>9.1f} {speedup:>7.1f}x")


if __name__ == "__main__":
    main()
