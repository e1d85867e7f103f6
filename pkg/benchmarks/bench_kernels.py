#!/usr/bin/env python3
"""Benchmark the off-grid evaluation kernel: compiled extension vs NumPy.

The kernel evaluates a truncated Fourier series at arbitrary complex points;
it dominates the runtime of the composition oracles and particle diagnostics
(full-grid evaluations are n^3 points times O(n^3) modes). Run:

    python benchmarks/bench_kernels.py [--sizes 16,32] [--points 512,4096]
"""

import argparse
import time

import numpy as np

from eulerlab import _kernels
from eulerlab._kernels import fallback


def _inputs(n, npts, band, seed=0):
    rng = np.random.default_rng(seed)
    coeffs = np.zeros((3, n, n, n), dtype=np.complex128)
    k = np.fft.fftfreq(n, d=1.0 / n)
    keep = np.abs(k) <= band
    mask = np.einsum("i,j,k->ijk", keep, keep, keep)
    coeffs[:] = (rng.standard_normal((3, n, n, n))
                 + 1j * rng.standard_normal((3, n, n, n))) * mask
    pts = rng.uniform(0, 2 * np.pi, (npts, 3)) + 0.05j * rng.standard_normal((npts, 3))
    return coeffs, k, pts.astype(np.complex128)


def _time(fn, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="16,32")
    parser.add_argument("--points", default="512,4096")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    points = [int(p) for p in args.points.split(",")]

    have_compiled = _kernels.BACKEND == "compiled"
    if not have_compiled:
        print("note: compiled extension not available; timing the fallback only")
    print(f"selected backend at import: {_kernels.BACKEND}")
    header = f"{'n':>4} {'band':>4} {'npts':>6} {'numpy (s)':>10}"
    if have_compiled:
        header += f" {'compiled (s)':>12} {'speedup':>8} {'max |diff|':>10}"
    print(header)

    for n in sizes:
        band = n // 3
        for npts in points:
            coeffs, k, pts = _inputs(n, npts, band)
            t_py, ref = _time(
                lambda: fallback.eval_modes(coeffs, k, k, k, pts), args.repeats
            )
            row = f"{n:>4} {band:>4} {npts:>6} {t_py:>10.4f}"
            if have_compiled:
                from eulerlab._kernels import _evalc

                t_c, got = _time(
                    lambda: _evalc.eval_modes(coeffs, k, k, k, pts), args.repeats
                )
                diff = float(np.max(np.abs(got - ref)))
                row += f" {t_c:>12.4f} {t_py / t_c:>8.2f} {diff:>10.2e}"
            print(row)


if __name__ == "__main__":
    main()
