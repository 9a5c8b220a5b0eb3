"""Time the numpy and compiled leakage-minimization kernels.

Usage::

    python3 benchmarks/bench_kernel.py [--repeats N]

Each case solves the same channel draws with both kernels and reports
the median wall time per solve and the speedup.
"""

import argparse
import statistics
import time

from analog_ia.channel import crandn, stream_rng
from analog_ia.ia import IaConvergenceError, SolverOptions, solve_precoders
from analog_ia.ia._backend import KERNELS

CASES = [
    ("3-user 2x2, d=1", 3, 2, 2, 1),
    ("3-user 4x5, d=2", 3, 4, 5, 2),
]


def time_case(kernel, K, Nr, Nt, d, draws):
    times = []
    iters = 0
    for t in range(draws):
        H = crandn(stream_rng(2024, t, 0), K, K, Nr, Nt)
        start = time.perf_counter()
        try:
            sol = solve_precoders(H, (d,) * K, SolverOptions(kernel=kernel, init_seed=t))
        except IaConvergenceError as err:
            sol = err.solution
        times.append(time.perf_counter() - start)
        iters += sol.iterations
    return statistics.median(times), iters / draws


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=20, help="channel draws per case")
    args = parser.parse_args()
    names = [k for k in ("python", "compiled") if k in KERNELS]
    print(f"{'case':<18} {'kernel':<9} {'median ms':>10} {'mean iters':>11}")
    for label, K, Nr, Nt, d in CASES:
        med = {}
        for name in names:
            med[name], iters = time_case(name, K, Nr, Nt, d, args.repeats)
            print(f"{label:<18} {name:<9} {1e3 * med[name]:>10.3f} {iters:>11.1f}")
        if len(med) == 2:
            print(f"{label:<18} speedup   {med['python'] / med['compiled']:>10.1f}x")


if __name__ == "__main__":
    main()
