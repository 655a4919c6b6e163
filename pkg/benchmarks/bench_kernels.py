"""Time the compiled kernels against their pure-Python twins.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import random
import statistics
import time

import numpy as np

from framesched import kernels


def acc_dp_args(n_frames):
    gamma = 33_333
    arrivals = np.arange(n_frames, dtype=np.int64) * gamma
    return arrivals, 200_000, 0, [52_000, 17_000], [0.52, 0.41], 1000


def oracle_args(n_frames, objective=0, seed=0):
    rng = random.Random(seed)
    gamma = 33_333
    arrivals = np.arange(n_frames, dtype=np.int64) * gamma
    sizes = np.array([[round(4 * r * r * (1 + rng.uniform(-0.2, 0.2))) for r in (45, 134, 224)]
                      for _ in range(n_frames)], dtype=np.int64)
    kind = [0, 0, 0, 0, 0, 0, 1, 1, 2]
    res = [2, 1, 0, 2, 1, 0, 0, 0, 0]
    dur = [69_000, 69_000, 69_000, 9_000, 9_000, 9_000, 52_000, 17_000, 0]
    acc = [0.67, 0.62, 0.25, 0.51, 0.46, 0.16, 0.52, 0.41, 0.0]
    return (arrivals, 200_000, 0, 0, sizes, np.array([0]), np.array([1_500_000]), 100_000,
            kind, res, dur, acc, objective, 50.0, 30.0)


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if kernels.compiled_backend is None:
        parser.exit(1, "compiled kernels are not built; run `pip install -e . --no-build-isolation`\n")

    cases = [
        ("acc_dp, 10 frames", "acc_dp", acc_dp_args(10)),
        ("acc_dp, 300 frames", "acc_dp", acc_dp_args(300)),
        ("oracle_search, 6 frames", "oracle_search", oracle_args(6)),
        ("oracle_search, 8 frames", "oracle_search", oracle_args(8)),
        ("oracle_search, 8, utility", "oracle_search", oracle_args(8, objective=1)),
    ]
    print(f"{'kernel':<26}{'python (ms)':>14}{'compiled (ms)':>16}{'speedup':>10}")
    for label, name, case in cases:
        py_best, _ = best_of(getattr(kernels.python_backend, name), case, args.repeat)
        cy_best, _ = best_of(getattr(kernels.compiled_backend, name), case, args.repeat)
        print(f"{label:<26}{py_best * 1e3:>14.2f}{cy_best * 1e3:>16.3f}{py_best / cy_best:>9.0f}x")


if __name__ == "__main__":
    main()
