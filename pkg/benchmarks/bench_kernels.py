#!/usr/bin/env python3
"""Benchmark the compiled marching kernels against the pure-Python fallback.

Times the transformed-equation step and the physical-variable step on
representative grids.  Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from prandtl_lab import _kernels_py

try:
    from prandtl_lab import _kernels
except ImportError:
    _kernels = None


def vm_workload(n):
    psi = 30.0 * (np.arange(n + 1) / n) ** 3
    w = 2.0 * psi / (1.0 + np.sqrt(psi))
    hm = psi[1:-1] - psi[:-2]
    hp = psi[2:] - psi[1:-1]
    lo = 2.0 / (hm * (hm + hp))
    mid = -2.0 / (hm * hp)
    hi = 2.0 / (hp * (hm + hp))
    a = np.sqrt(np.maximum(w[1:-1], 0.0))
    src = np.full(n - 1, -2.0)
    return (w, a, lo, mid, hi, 1e-3, src, float(w[-1]))


def phys_workload(n):
    y = np.linspace(0.0, 9.0, n + 1)
    u = 5.0 * np.tanh(y)
    v = 0.1 * y
    return (u, u, v, float(y[1] - y[0]), 1e-3, 1.0, float(u[-1]))


def time_call(fn, args, repeats):
    fn(*args)  # warmup
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats * 1e6  # microseconds


def main():
    repeats = 2000
    print(f"{'kernel':<16s}{'N':>6s}{'python us':>12s}{'cython us':>12s}{'speedup':>9s}")
    for n in (512, 1024, 2048, 4096):
        args = vm_workload(n)
        t_py = time_call(_kernels_py.vm_step_solve, args, repeats)
        if _kernels is not None:
            t_cy = time_call(_kernels.vm_step_solve, args, repeats)
            print(f"{'vm_step':<16s}{n:>6d}{t_py:>12.1f}{t_cy:>12.1f}{t_py / t_cy:>9.2f}")
        else:
            print(f"{'vm_step':<16s}{n:>6d}{t_py:>12.1f}{'n/a':>12s}{'':>9s}")
    for n in (1024, 2048, 4096):
        args = phys_workload(n)
        t_py = time_call(_kernels_py.phys_step_solve, args, repeats)
        if _kernels is not None:
            t_cy = time_call(_kernels.phys_step_solve, args, repeats)
            print(f"{'phys_step':<16s}{n:>6d}{t_py:>12.1f}{t_cy:>12.1f}{t_py / t_cy:>9.2f}")
        else:
            print(f"{'phys_step':<16s}{n:>6d}{t_py:>12.1f}{'n/a':>12s}{'':>9s}")
    if _kernels is None:
        print("\ncompiled extension not present; showing fallback timings only")


if __name__ == "__main__":
    main()
