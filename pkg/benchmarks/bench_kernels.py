"""Time the numba kernels against their pure-Python/numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3]

The fallback timings use ``py_func`` (the same source, uncompiled) and, for
enumeration, the vectorised numpy block.  Inputs are identical for both paths
and the results are checked for agreement before timing is reported.
"""

import argparse
import time

import numpy as np

from gibbslab import _accel, kernels
from gibbslab.dynamics import nearest_neighbor_bonds
from gibbslab.factors import compile_factors
from gibbslab.interaction import ising_ferro
from gibbslab.lattice import PLUS, box, rect


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    fg = compile_factors(ising_ferro(0.4, 0.1, d=2), box(2, 2), {}, PLUS)
    flat = fg.flat()
    n = fg.n
    rng = np.random.default_rng(0)
    hb_u = rng.random(2000 * n)
    no_record = np.zeros((0, n), dtype=np.int64)
    g_sites = rng.integers(0, n, size=200_000)
    g_u = rng.random(200_000)
    a, b = nearest_neighbor_bonds(rect((64, 64)), periodic=True)
    ex_choice = rng.integers(0, len(a), size=200_000)
    small = compile_factors(ising_ferro(0.4, d=2), rect((4, 4)), {}, PLUS)
    sflat = small.flat()[:4]
    total = 2**small.n

    def heat_bath(fn):
        return lambda: fn(np.zeros(n, dtype=np.int64), hb_u, 2000, 2, *flat, no_record)

    def glauber(fn):
        return lambda: fn(np.ones(n, dtype=np.int64), g_sites, g_u, 3.0, *flat, np.zeros(n, dtype=np.int64))

    def exclusion(fn):
        return lambda: fn(rng.integers(0, 2, size=64 * 64), a, b, ex_choice)

    yield "heat-bath 2000 sweeps, 25 sites", heat_bath(kernels.heat_bath_sweeps), heat_bath(kernels.heat_bath_sweeps.py_func)
    yield "glauber 2e5 events", glauber(kernels.glauber_events), glauber(kernels.glauber_events.py_func)
    yield "exclusion 2e5 swaps", exclusion(kernels.exclusion_events), exclusion(kernels.exclusion_events.py_func)
    yield (
        f"enumeration 2^{small.n} states",
        lambda: kernels.enum_block_lse(0, total, small.n, 2, *sflat),
        lambda: kernels.enum_block_energy_numpy(0, total, small.n, 2, small.factors),
    )


def check_agreement():
    fg = compile_factors(ising_ferro(0.4, 0.1, d=2), box(1, 2), {}, PLUS)
    m, s = kernels.enum_block_lse(0, 2**fg.n, fg.n, 2, *fg.flat()[:4])
    lw = -kernels.enum_block_energy_numpy(0, 2**fg.n, fg.n, 2, fg.factors)
    ref = np.log(np.exp(lw - lw.max()).sum()) + lw.max()
    if abs((m + np.log(s)) - ref) > 1e-10:
        raise SystemExit("compiled and numpy enumeration disagree")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not _accel.USE_NUMBA:
        print(f"numba disabled ({_accel.ENV_FLAG}); both columns time the fallback")
    check_agreement()
    print(f"{'kernel':36s} {'compiled s':>11s} {'fallback s':>11s} {'speedup':>8s}")
    for name, fast, slow in cases():
        fast()  # compile outside the timed region
        tf = best_of(fast, args.repeat)
        ts = best_of(slow, args.repeat)
        print(f"{name:36s} {tf:11.4f} {ts:11.4f} {ts / tf:8.1f}x")


if __name__ == "__main__":
    main()
