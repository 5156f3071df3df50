#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

The EM decode loop and the KDE grid evaluation dominate the runtime of
reconstruction sweeps, so those are the two kernels with a compiled core.
Run from the repository root after an editable install:

    python benchmarks/bench_kernels.py
"""

import argparse
import time

import numpy as np

from cpr_ldp._kernels import _pykernels
from cpr_ldp.mechanisms import split_budget, sw_params, sw_perturb_series
from cpr_ldp.recovery import em_grid, sw_cell_channel

try:
    from cpr_ldp._kernels import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def em_workload(m, grid_size, eps0, seed):
    params = sw_params(eps0)
    latent = np.random.default_rng(seed).random(m)
    observations = sw_perturb_series(latent, split_budget(eps0, 1), seed)
    dens = sw_cell_channel(params, observations, grid_size)
    grid = em_grid(grid_size)
    return dens, grid


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats per case (default: 5)")
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled kernels not built; showing the NumPy fallback only")

    rows = []

    for m, b, iters in ((31, 256, 20), (125, 256, 20), (500, 64, 200)):
        dens, grid = em_workload(m, b, 0.5, seed=1)
        label = f"em_decode m={m} B={b} iters={iters}"
        py = best_of(lambda: _pykernels.em_decode(dens, grid, iters, 1e-30), args.repeats)
        cy = (
            best_of(lambda: _ckernels.em_decode(dens, grid, iters, 1e-30), args.repeats)
            if _ckernels
            else None
        )
        rows.append((label, py, cy))

    rng = np.random.default_rng(2)
    for m, g in ((31, 512), (200, 512), (200, 5120)):
        samples = rng.random(m)
        grid = np.linspace(0.0, 1.0, g)
        label = f"kde_grid_eval m={m} G={g}"
        py = best_of(lambda: _pykernels.kde_grid_eval(samples, 0.05, grid), args.repeats)
        cy = (
            best_of(lambda: _ckernels.kde_grid_eval(samples, 0.05, grid), args.repeats)
            if _ckernels
            else None
        )
        rows.append((label, py, cy))

    width = max(len(r[0]) for r in rows)
    header = f"{'workload':<{width}}  {'numpy':>10}  {'cython':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, py, cy in rows:
        if cy is None:
            print(f"{label:<{width}}  {py * 1e3:>8.3f}ms  {'-':>10}  {'-':>8}")
        else:
            print(f"{label:<{width}}  {py * 1e3:>8.3f}ms  {cy * 1e3:>8.3f}ms  {py / cy:>7.1f}x")


if __name__ == "__main__":
    main()
