"""Compare the compiled and numpy kernel backends.

Run with ``python benchmarks/bench_kernels.py [--repeat R]``. For each kernel
the script checks that both backends agree and reports the best-of-R wall
time. Without the compiled extension only the numpy timings are printed.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from pevolab import kernels

py = kernels.python_backend
cy = kernels.compiled_backend


def cases(n: int = 256):
    rng = np.random.default_rng(0)
    x = np.linspace(-40.0, 40.0, n, endpoint=False)
    xi = np.fft.fftfreq(n, d=80.0 / n) * 2 * np.pi
    P = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    uhat = rng.normal(size=n) + 1j * rng.normal(size=n)
    R = np.linspace(2.0, 60.0, 64)
    a = rng.uniform(0.0, 40.0, size=20000)
    b = a + rng.uniform(0.0, 0.05, size=a.size)
    Rb = rng.uniform(2.0, 60.0, size=a.size)
    t = rng.uniform(-0.5, 1.5, size=200000)
    return {
        "ramp": (lambda k: k.ramp(t)),
        "weighted_cutoff_integrand": (lambda k: k.weighted_cutoff_integrand(t * 40.0, np.full_like(t, 30.0), 1.0)),
        "cumulative_weighted_integral": (lambda k: k.cumulative_weighted_integral(R, 0.5, 0.01, 4000)),
        "partial_weighted_integral": (lambda k: k.partial_weighted_integral(Rb, 0.5, a, b)),
        "kn_apply": (lambda k: k.kn_apply(P, x, xi, uhat)),
    }


def best_time(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=256, help="grid size for kn_apply")
    args = ap.parse_args(argv)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':32s} {'numpy [ms]':>12s} {'cython [ms]':>12s} {'speedup':>9s} {'max rel diff':>13s}")
    for name, call in cases(args.n).items():
        t_py = best_time(lambda: call(py), args.repeat)
        if cy is None:
            print(f"{name:32s} {1e3 * t_py:12.3f} {'-':>12s} {'-':>9s} {'-':>13s}")
            continue
        t_cy = best_time(lambda: call(cy), args.repeat)
        ref, got = np.asarray(call(py)), np.asarray(call(cy))
        diff = float(np.max(np.abs(got - ref)) / max(np.max(np.abs(ref)), 1e-300))
        print(f"{name:32s} {1e3 * t_py:12.3f} {1e3 * t_cy:12.3f} {t_py / t_cy:9.2f} {diff:13.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
