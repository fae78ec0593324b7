#!/usr/bin/env python
"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 1000 4000]

Both backends are imported directly, so the environment switch is not needed.
Reports the best wall time per case and the speedup of the compiled kernels,
and the largest difference between the two backends. The point-source case
feeds random, non-smooth densities, so the per-interval slopes (divided by
delta) amplify rounding; differences of order 1e-8 there are expected and both
backends sit equally close to a quadrature reference.
"""

import argparse
import sys
import timeit

import numpy as np

from impurity_nls import _kernels_py as py
from impurity_nls.core import Grid1D, gaussian
from impurity_nls.delta import _SQRT_4PI_I, _free_origin_series

try:
    from impurity_nls import _kernels as cy
except ImportError:
    cy = None


def charge_case(n, mu=1.0):
    phi = gaussian(Grid1D(20.0, 1024), 1.0)
    delta = 1.0 / n
    f = _free_origin_series(phi, delta, n)
    kappa = -1j * mu / _SQRT_4PI_I
    return lambda mod: mod.solve_charge(f, kappa, delta, 0.5, 1e-12, 50)[0]


def source_case(n, m=513):
    rng = np.random.default_rng(7)
    g = rng.random(n + 1)
    x = np.linspace(0.0, 20.0, m)
    delta = 1.0 / n
    return lambda mod: mod.duhamel_point_source(x, g, delta)


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 4000])
    args = ap.parse_args(argv)

    if cy is None:
        print("compiled extension not built; timing the fallback only")

    print(f"{'kernel':<22}{'steps':>8}{'python [s]':>14}{'cython [s]':>14}{'speedup':>10}{'max diff':>12}")
    for name, make in (("solve_charge", charge_case), ("duhamel_point_source", source_case)):
        for n in args.sizes:
            run = make(n)
            t_py = best_of(lambda: run(py), args.repeat)
            if cy is None:
                print(f"{name:<22}{n:>8}{t_py:>14.4f}{'-':>14}{'-':>10}{'-':>12}")
                continue
            t_cy = best_of(lambda: run(cy), args.repeat)
            diff = np.max(np.abs(run(py) - run(cy)))
            print(f"{name:<22}{n:>8}{t_py:>14.4f}{t_cy:>14.4f}{t_py / t_cy:>10.1f}{diff:>12.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
