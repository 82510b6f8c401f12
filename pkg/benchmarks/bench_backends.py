"""Compare the compiled and pure-Python kernels on operator construction.

    python3 benchmarks/bench_backends.py --sizes 512 1024 2048 --repeats 3

Prints the median build time per backend and size, the speed-up, and the
fitted log-log slope of each backend.
"""

import argparse
import statistics
import time

import numpy as np

from fracspec import kernels
from fracspec.opcore import build_fio


def time_build(mu, alpha, beta, n, repeats):
    runs = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        build_fio(mu, alpha, beta, n)
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 512, 1024, 2048])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--mu", type=float, default=0.5)
    ap.add_argument("--alpha", type=float, default=0.0)
    ap.add_argument("--beta", type=float, default=0.5)
    args = ap.parse_args()

    backends = kernels.available_backends()
    table = {}
    for name in backends:
        with kernels.use_backend(name):
            table[name] = [time_build(args.mu, args.alpha, args.beta, n, args.repeats) for n in args.sizes]

    print(f"{'N':>7} " + " ".join(f"{b:>12}" for b in backends) + ("   speed-up" if len(backends) > 1 else ""))
    for i, n in enumerate(args.sizes):
        row = f"{n:7d} " + " ".join(f"{table[b][i]:12.4f}" for b in backends)
        if "compiled" in table and "python" in table:
            row += f"   {table['python'][i] / table['compiled'][i]:8.1f}x"
        print(row)
    if len(args.sizes) > 1:
        for b in backends:
            slope = np.polyfit(np.log(args.sizes), np.log(table[b]), 1)[0]
            print(f"log-log slope ({b}): {slope:.2f}")


if __name__ == "__main__":
    main()
