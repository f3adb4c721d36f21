"""Compare the compiled kernels with the numpy/Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--events 200000]

Each kernel is timed on the same inputs for every available backend; the
best of ``--repeat`` runs is reported, with the speed-up over Python.
"""
import argparse
import timeit

import numpy as np

from freqbin.kernels import backends


def make_inputs(n_events, seed=0):
    rng = np.random.default_rng(seed)
    rate = 2e5
    ta = np.sort(rng.uniform(0, n_events / rate, n_events))
    tb = np.sort(np.concatenate([ta[: n_events // 2] + rng.normal(0, 1e-10, n_events // 2),
                                 rng.uniform(0, n_events / rate, n_events - n_events // 2)]))
    lo, hi = -3e-9, 3e-9
    ci, cj = backends()["python"].candidate_pairs(ta, tb, lo, hi)
    d = np.abs(tb[cj] - ta[ci])
    order = np.lexsort((cj, ci, d)).astype(np.int64)
    dead = np.sort(rng.uniform(0, n_events / rate, n_events))
    m = rng.normal(size=(512, 512)) + 1j * rng.normal(size=(512, 512))
    return {
        "candidate_pairs": (ta, tb, lo, hi),
        "greedy_select": (order, ci.astype(np.int64), cj.astype(np.int64), len(ta), len(tb)),
        "deadtime_filter": (dead, 1e-6),
        "diagonal_sums": (m,),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--events", type=int, default=200_000)
    args = ap.parse_args(argv)
    inputs = make_inputs(args.events)
    impls = backends()
    if "cython" not in impls:
        print("compiled kernels not built; timing the Python fallback only")
    print(f"{'kernel':<18}" + "".join(f"{name:>14}" for name in impls) + f"{'speed-up':>11}")
    rows = {}
    for kname, call_args in inputs.items():
        times = {}
        for bname, mod in impls.items():
            fn = getattr(mod, kname)
            times[bname] = min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=args.repeat))
        rows[kname] = times
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{kname:<18}" + "".join(f"{times[b] * 1e3:>12.2f}ms" for b in impls) + f"{speed:>10.1f}x")
    return rows


if __name__ == "__main__":
    main()
