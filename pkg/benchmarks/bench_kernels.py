#!/usr/bin/env python3
"""Benchmark the compiled stencil kernels against the numpy reference.

The explicit stepper is the hot loop of every run (a long propagation run
takes ~1e5 steps), so this is the number that decides wall-clock time.

Usage: python benchmarks/bench_kernels.py [--steps N]
"""

import argparse
import time

import numpy as np

from pmelab import kernels


def _initial_1d(n):
    x = np.linspace(-4.0, 4.0, n)
    return np.clip(1.0 / 12.0 * (1.0 - x * x), 0.0, None)


def _initial_2d(n):
    x = np.linspace(-3.0, 3.0, n)
    r2 = x[:, None] ** 2 + x[None, :] ** 2
    return np.clip(1.0 / 16.0 * (1.0 - r2 / 4.0), 0.0, None)


def bench(label, u0, m, nu, steps):
    rows = []
    for backend in kernels.available_backends():
        u = u0.copy()
        kernels.advance(u, m, nu, 32, True, backend=backend)  # warm up
        u = u0.copy()
        start = time.perf_counter()
        kernels.advance(u, m, nu, steps, True, backend=backend)
        elapsed = time.perf_counter() - start
        rows.append((backend, elapsed, steps / elapsed, float(u.sum())))
    print(f"\n{label}  (m={m}, {steps} steps, {u0.size} cells)")
    print(f"  {'backend':<10} {'seconds':>9} {'steps/s':>12} {'checksum':>14}")
    base = None
    for backend, elapsed, rate, checksum in rows:
        note = ""
        if base is None:
            base = elapsed
        else:
            note = f"  ({elapsed / base:.1f}x slower than {rows[0][0]})"
        print(f"  {backend:<10} {elapsed:9.3f} {rate:12.0f} {checksum:14.9f}{note}")
    if len(rows) == 2:
        a = u0.copy()
        b = u0.copy()
        kernels.advance(a, m, nu, min(steps, 2000), True, backend=rows[0][0])
        kernels.advance(b, m, nu, min(steps, 2000), True, backend=rows[1][0])
        print(f"  max |compiled - reference| after {min(steps, 2000)} steps: "
              f"{np.abs(a - b).max():.3e}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=20000)
    args = parser.parse_args()
    print(f"available backends: {kernels.available_backends()} "
          f"(default: {kernels.BACKEND})")
    bench("1-D stepper, N=801", _initial_1d(801), 2.0, 0.2, args.steps)
    bench("1-D stepper, N=801, general exponent", _initial_1d(801), 2.5, 0.2, args.steps)
    bench("2-D stepper, 201x201", _initial_2d(201), 2.0, 0.1, max(args.steps // 10, 100))


if __name__ == "__main__":
    main()
