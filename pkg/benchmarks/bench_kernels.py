"""Time each numba kernel against its numpy/python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Compilation happens in a warm-up call that is not timed. ``unwind`` only sees
meaningful input inside a solve, so it is covered by the parity tests instead.
"""

import argparse
import time

import numpy as np

from sparseclt import _accel, _kernels
from sparseclt.gwtree import sample_forest
from sparseclt.wgraph import WeightDist, sample_er_graph


def _peel_args(g):
    indptr, _, eid = g.csr
    return (g.n, g.present.copy(), g.u, g.v, g.w.copy(), np.zeros(g.n), indptr, eid)


def cases():
    f = sample_forest(20_000, 6, 1.8, WeightDist.uniform(2.0), 1)
    tree = (f.parent, f.depth, f.weight)
    g = sample_er_graph(20_000, 1.5 / 20_000, WeightDist.exp1(), 2)
    rng = np.random.default_rng(3)
    n = 14
    W = np.triu(rng.random((n, n)), 1)
    W = W + W.T
    m = 20
    pairs = rng.choice(10, size=(m, 2))
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    ebits = (np.left_shift(1, pairs[:, 0]) | np.left_shift(1, pairs[:, 1])).astype(np.int64)
    return {
        "mwm_values": tree + (6,),
        "ec_values": tree + (6, 1.0),
        "dmm_values": tree + (6, 1.0, -1.0),
        "peel": _peel_args(g),
        "matching_dp": (n, W, rng.random(n)),
        "edge_subset_min": (ebits, rng.random(ebits.size), np.int64((1 << 10) - 1), 0.5, False),
    }


def best_time(fn, args, repeat):
    fn(*args)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return
    print(f"{'kernel':<18}{'numba [ms]':>12}{'fallback [ms]':>15}{'speedup':>10}")
    for name, call_args in cases().items():
        fast, slow = _kernels.VARIANTS[name]
        tf = best_time(fast, call_args, args.repeat)
        ts = best_time(slow, call_args, max(1, args.repeat // 2))
        print(f"{name:<18}{tf * 1e3:>12.2f}{ts * 1e3:>15.2f}{ts / tf:>10.1f}")


if __name__ == "__main__":
    main()
