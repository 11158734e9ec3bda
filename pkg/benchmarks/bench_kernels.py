"""Wall-clock comparison of the compiled and pure-numpy strip kernels.

Two measurements:

1. End-to-end: the same bump problem through both backends (best of
   --repeats each).  This includes the shared per-strip record assembly,
   so it understates the raw kernel gap at small problem sizes.
2. Kernel-only: one call to the strip-advance twins on a single large
   smooth level, which isolates the compiled/numpy difference.

The numba path is warmed once before timing so JIT compilation is not
counted.

Usage: python benchmarks/bench_kernels.py [--h 0.005] [--t-final 2.0]
"""

import argparse
import time

import numpy as np

from glimmrcm import kernels
from glimmrcm.kernels import scalar
from glimmrcm.scheme import PiecewiseConstant, StaggeredGrid, run
from glimmrcm.sequence import SamplingSequence
from glimmrcm.system import builtin_system

WORKLOADS = (
    ("burgers_inhom", {"a_inf": 1.0, "eps": 0.05, "kappa": 0.05}),
    ("advection_var", {"a_inf": 1.0, "eps": 0.3}),
)


def time_run(model, grid, data, t_final, repeats):
    best = float("inf")
    for _ in range(repeats):
        tic = time.perf_counter()
        traj = run(model, grid, SamplingSequence(), data, t_final)
        best = min(best, time.perf_counter() - tic)
    return best, traj.n_strips


def bench_kernel_only(cells, repeats):
    h, lam = 0.005, 2.0
    r0 = -cells
    xs = (r0 + 2 * np.arange(cells + 1)) * h
    u = 1.0 + 0.05 * np.sin(xs)
    lim = abs(xs[0]) + 1.0
    args = (u, r0, 0.2, h, h / lam, lam, 0.25, 0, 1.0, 0.05, 0.05,
            -np.inf, np.inf, 0.5, -lim, lim, 1)

    print(f"\nkernel-only, one level of {cells + 1} cells, "
          f"best of {repeats}")
    print(f"{'kernel':<16} {'seconds':>9} {'ns/cell':>9} {'speedup':>8}")
    times = {}
    for label, fn in (("numba", scalar.strip_advance),
                      ("numpy", scalar.strip_advance_np)):
        if label == "numba":
            if not kernels.HAS_NUMBA:
                continue
            fn(*args)                               # warm (JIT compile)
        best = float("inf")
        for _ in range(repeats):
            tic = time.perf_counter()
            status = fn(*args)[0]
            best = min(best, time.perf_counter() - tic)
        assert status == 0
        times[label] = best
        line = f"{label:<16} {best:>9.4f} {best / (cells + 1) * 1e9:>9.0f}"
        if label == "numpy" and "numba" in times:
            line += f" {times['numpy'] / times['numba']:>7.1f}x"
        print(line)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", type=float, default=0.005)
    ap.add_argument("--t-final", type=float, default=2.0)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--cells", type=int, default=200000,
                    help="level size for the kernel-only measurement")
    args = ap.parse_args()

    grid = StaggeredGrid(h=args.h, lambda_cfl=2.0, x_min=-15.0, x_max=20.0)
    data = PiecewiseConstant(np.array([-1.0, 0.0, 1.0]),
                             np.array([[1.0], [1.05], [0.95], [1.0]]))
    cells = int(round((grid.x_max - grid.x_min) / grid.h))
    print(f"h={args.h}, t_final={args.t_final}, ~{cells} cells, "
          f"best of {args.repeats}")
    print(f"{'system':<16} {'backend':<8} {'strips':>7} {'seconds':>9} "
          f"{'speedup':>8}")

    for name, params in WORKLOADS:
        model = builtin_system(name, params)
        if kernels.HAS_NUMBA:
            kernels.BACKEND = "numba"
            run(model, grid, SamplingSequence(), data, 2.0 * grid.dt)  # warm

        times = {}
        for backend in ("numba", "numpy"):
            if backend == "numba" and not kernels.HAS_NUMBA:
                continue
            kernels.BACKEND = backend
            times[backend], n_strips = time_run(model, grid, data,
                                                args.t_final, args.repeats)
            print(f"{name:<16} {kernels.active_backend():<8} {n_strips:>7} "
                  f"{times[backend]:>9.3f}", end="")
            if backend == "numpy" and "numba" in times:
                print(f" {times['numpy'] / times['numba']:>7.1f}x")
            else:
                print(f" {'':>8}")
        kernels.BACKEND = "numba"

    bench_kernel_only(args.cells, args.repeats)


if __name__ == "__main__":
    main()
