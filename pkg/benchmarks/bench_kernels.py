"""Compiled vs pure-Python replication kernels.

Usage::

    python3 benchmarks/bench_kernels.py --reps 2000 --N 100 --out bench.csv

Prints one CSV row per (workload, backend) with the median wall time and
checks that both backends return identical arrays.
"""
import argparse
import csv
import statistics
import sys
import time

import numpy as np

from smclab import fixtures
from smclab.kernels import BACKENDS
from smclab.particles import replicate
from smclab.sis import build_sis, run_sis


def _time(fn, repeat):
    out, times = None, []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--N", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)

    theta = fixtures.theta_example(6, 1.0)
    chain = fixtures.chain_2block()
    workloads = {
        "smc-theta-n6": lambda b: replicate(theta.induce_fk_model(), np.ones(7), args.N, args.reps, args.seed,
                                            backend=b).nu,
        "smc-chain-2block": lambda b: replicate(chain.base, np.ones(6), args.N, args.reps, args.seed,
                                                backend=b).nu,
        "sis-theta-n6": lambda b: np.array([run_sis(build_sis(theta), np.eye(7)[6], args.N, args.reps,
                                                    args.seed, backend=b).mse]),
    }
    rows = []
    for name, fn in workloads.items():
        ref, ref_t = None, None
        for backend in sorted(BACKENDS, reverse=True):
            # the pure-Python kernel is slow; fewer repeats keep the run short
            out, t = _time(lambda: fn(backend), args.repeat if backend == "compiled" else 1)
            same = "" if ref is None else str(bool(np.array_equal(out, ref)))
            if ref is None:
                ref, ref_t = out, t
            rows.append(dict(workload=name, backend=backend, N=args.N, reps=args.reps, seconds=f"{t:.6f}",
                             speedup=f"{ref_t / t:.2f}", identical=same))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(fh, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    if args.out:
        fh.close()
    return 0 if all(r["identical"] in ("", "True") for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
