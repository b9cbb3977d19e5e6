#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy fallbacks.

Run:  python benchmarks/bench_kernels.py [--size 256] [--repeat 50]

The active simulation backend is chosen at import time by POROSCALE_NUMBA;
this script always times both implementations side by side (after a warmup
call so JIT compilation is excluded).
"""

import argparse
import time

import numpy as np

from poroscale import _kernels


def timeit(fn, args, repeat):
    fn(*args)                      # warmup / JIT
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=256, help="grid cells per side")
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()

    n = args.size
    rng = np.random.default_rng(0)
    cx = rng.uniform(0.5, 2.0, (n, n))
    cy = rng.uniform(0.5, 2.0, (n, n))
    x = rng.normal(size=(n, n))
    w = rng.uniform(-0.05, 0.5, n * n)
    r = rng.uniform(0.0, 2.0, n * n)
    acc = np.zeros(n * n)
    idx = rng.integers(0, n * n, 4 * n * n)
    vals = rng.normal(size=4 * n * n)

    cases = [
        ("diffusion_apply", _kernels.diffusion_apply_numpy, (cx, cy, x)),
        ("surface_event_step", _kernels.surface_event_step_numpy, (w, r, 0.01, 1.0)),
        ("face_scatter_add", _kernels.face_scatter_add_numpy, (acc, idx, vals)),
    ]

    print(f"backend in use: {_kernels.backend_name()}   grid {n}x{n}, {args.repeat} reps")
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}")
    for name, numpy_fn, fargs in cases:
        t_numpy = timeit(numpy_fn, fargs, args.repeat) * 1e3
        fast_fn = getattr(_kernels, name)
        if _kernels.backend_name() == "numba":
            t_fast = timeit(fast_fn, fargs, args.repeat) * 1e3
            print(f"{name:<22}{t_numpy:>12.3f}{t_fast:>12.3f}{t_numpy / t_fast:>9.2f}")
        else:
            print(f"{name:<22}{t_numpy:>12.3f}{'n/a':>12}{'':>9}")


if __name__ == "__main__":
    main()
