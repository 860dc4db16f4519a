"""Compiled vs pure-numpy kernels: lattice propagation and trajectory blocks.

    python benchmarks/bench_kernels.py [--repeat 3]

Both backends are called explicitly, so the SKIPFREE_DISABLE_NUMBA flag
only matters in that it removes the compiled column. Each row also checks
that the two backends returned identical results.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from skipfree import _accel, kernels
from skipfree.distributions import make_finite, make_poisson_shifted
from skipfree.montecarlo import BLOCK_SIZE, censor_cut


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def propagate_case(dist, n):
    def call(backend):
        return lambda: kernels.propagate(dist.pmf, -1, n, -1, record_level=-1, backend=backend)

    return call


def walk_case(dist, horizon, n_traj=BLOCK_SIZE):
    table = kernels.sampling_table(dist.pmf)
    steps = dist.support.astype(np.int64)
    cut = censor_cut(dist)

    def call(backend):
        return lambda: kernels.run_walk_block(np.random.PCG64(1), table, steps, 0, horizon, n_traj, 1, cut, backend)

    return call


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b) if isinstance(a, np.ndarray) else a == b


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    poisson = make_poisson_shifted(1.5)
    simple = make_finite([(-1, 0.3), (1, 0.7)])
    cases = [
        ("propagate Poi(1.5)-1, N=2000", propagate_case(poisson, 2000)),
        ("propagate p=0.7 walk, N=5000", propagate_case(simple, 5000)),
        ("walk block Poi(1.5)-1, 65536 paths", walk_case(poisson, 10_000)),
        ("walk block p=0.7 walk, 65536 paths", walk_case(simple, 10_000)),
    ]
    backends = ["numba", "numpy"] if _accel.HAVE_NUMBA else ["numpy"]
    if _accel.HAVE_NUMBA:
        for _, case in cases:  # compile outside the timed region
            case("numba")()

    print(f"{'case':<38}" + "".join(f"{b:>12}" for b in backends) + ("   speedup  identical" if len(backends) == 2 else ""))
    for name, case in cases:
        times, outs = [], []
        for b in backends:
            t, out = best_of(case(b), args.repeat)
            times.append(t)
            outs.append(out)
        line = f"{name:<38}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(backends) == 2:
            line += f"{times[1] / times[0]:>9.1f}x  {same(outs[0], outs[1])!s:>9}"
        print(line)


if __name__ == "__main__":
    main()
