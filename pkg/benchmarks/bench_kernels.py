"""Benchmark the compiled forest kernels against the pure-NumPy fallback.

Runs both backends on identical data, checks they build bit-identical trees,
and reports wall-clock timings.  Usage:

    python3 benchmarks/bench_kernels.py [--rows 4000] [--features 12] [--trees 60]
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from metael._kernels import BACKEND, _forest_py

try:
    from metael._kernels import _forest_cy
except ImportError:
    _forest_cy = None


def make_data(rows: int, features: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = random.Random(seed)
    X = np.array(
        [[rng.uniform(-3, 3) for _ in range(features)] for _ in range(rows)],
        dtype=np.float64,
    )
    # noisy linear concept so trees have real structure to find
    weights = np.array([rng.uniform(-1, 1) for _ in range(features)])
    y = ((X @ weights + np.array([rng.gauss(0, 1) for _ in range(rows)])) > 0).astype(
        np.float64
    )
    return X, y


def run(module, X, y, trees: int, repeats: int) -> tuple[float, list]:
    best = float("inf")
    forest = None
    for _ in range(repeats):
        start = time.perf_counter()
        forest = module.train_forest(X, y, trees, 0, 1, seed=9)
        best = min(best, time.perf_counter() - start)
    return best, forest


def forests_identical(a, b) -> bool:
    if len(a) != len(b):
        return False
    for tree_a, tree_b in zip(a, b):
        for arr_a, arr_b in zip(tree_a, tree_b):
            if not np.array_equal(np.asarray(arr_a), np.asarray(arr_b)):
                return False
    return True


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=4000)
    parser.add_argument("--features", type=int, default=12)
    parser.add_argument("--trees", type=int, default=60)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if _forest_cy is None:
        print("compiled backend unavailable; nothing to compare")
        return 1

    X, y = make_data(args.rows, args.features, seed=3)
    print(f"active backend: {BACKEND}")
    print(f"data: {args.rows} rows x {args.features} features, {args.trees} trees")

    t_py, forest_py = run(_forest_py, X, y, args.trees, args.repeats)
    t_cy, forest_cy = run(_forest_cy, X, y, args.trees, args.repeats)

    identical = forests_identical(forest_py, forest_cy)
    print(f"python backend: {t_py:.3f}s")
    print(f"cython backend: {t_cy:.3f}s")
    print(f"speedup: {t_py / t_cy:.1f}x")
    print(f"forests bit-identical: {identical}")

    scores_py = _forest_py.predict_forest(forest_py, X)
    scores_cy = _forest_cy.predict_forest(forest_cy, X)
    print(f"predictions identical: {np.array_equal(scores_py, scores_cy)}")
    return 0 if identical else 1


if __name__ == "__main__":
    raise SystemExit(main())
