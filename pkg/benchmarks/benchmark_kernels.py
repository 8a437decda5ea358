#!/usr/bin/env python3
"""Benchmark the master-equation stepper: compiled kernel vs NumPy fallback.

Usage: python benchmarks/benchmark_kernels.py [--sizes 64,128,256] [--steps 200]
"""

import argparse
import time

import numpy as np

from disordyn import AndersonBox, covariance_matrix
from disordyn.kernels import available_backends, get_rk4_propagate
from disordyn.lindblad import rate_matrix


def make_problem(n: int):
    rng = np.random.default_rng(n)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    rate = np.ascontiguousarray(rate_matrix(covariance_matrix(AndersonBox(10.0), n)))
    return np.ascontiguousarray(rho), rate


def time_backend(backend: str, n: int, steps: int, dt: float = 0.005) -> float:
    rho, rate = make_problem(n)
    propagate = get_rk4_propagate(backend)
    propagate(rho, 0.0, dt, 2, 1.0, rate, False)  # warm up
    best = np.inf
    for _ in range(3):
        t0 = time.perf_counter()
        propagate(rho, 0.0, dt, steps, 1.0, rate, False)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="64,128,256")
    parser.add_argument("--steps", type=int, default=200)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    backends = available_backends()
    print(f"backends: {', '.join(backends)}   ({args.steps} RK4 steps per timing)")
    header = f"{'n':>6} " + " ".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f" {'speedup':>9}"
    print(header)
    for n in sizes:
        times = [time_backend(b, n, args.steps) for b in backends]
        row = f"{n:>6} " + " ".join(f"{t*1e3:>10.1f}ms" for t in times)
        if len(times) == 2:
            row += f" {times[1] / times[0]:>8.2f}x"
        print(row)


if __name__ == "__main__":
    main()
