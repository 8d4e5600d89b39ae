"""Compare the compiled and pure-Python kernel backends.

Run with ``python benchmarks/bench_kernels.py``; prints the best-of-``repeat``
time per call for each kernel and the speedup of the compiled backend.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from dnls import _kernels


def workloads(n: int, rng: np.random.Generator) -> dict:
    diag = rng.uniform(3, 6, n)
    off = -np.ones(n)
    rhs = rng.uniform(-1, 1, n)
    psi = rng.uniform(-1, 1, n)
    pts = np.column_stack([np.sin(np.arange(n) * 0.7), np.cos(np.arange(n) * 0.7)])
    return {
        "tridiag_solve": lambda b: _kernels.tridiag_solve(off, diag, off, rhs, backend=b),
        "iterate_map": lambda b: _kernels.iterate_map(0.0, 1.05, 1.0, -1.0, n, 1e8, backend=b),
        "transfer_trace": lambda b: _kernels.transfer_trace(psi, 10.0, -0.5, backend=b),
        "greedy_cluster": lambda b: _kernels.greedy_cluster(pts[: min(n, 2000)], 1e-6, backend=b),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000, help="problem size")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    try:
        _kernels.get_backend("cython")
        backends = ["cython", "python"]
    except ImportError:
        backends = ["python"]
        print("compiled extension not built; timing the pure-Python backend only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}" + "".join(f"{b:>14}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, fn in workloads(args.n, rng).items():
        times = []
        for b in backends:
            number = 3
            times.append(min(timeit.repeat(lambda: fn(b), number=number, repeat=args.repeat)) / number)
        row = f"{name:<16}" + "".join(f"{t * 1e3:>12.3f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
