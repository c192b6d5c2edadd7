"""Benchmark the compiled kernel backend against the pure-Python fallback.

Both backends consume identical random streams and share the array layout,
so the comparison is apples to apples; the script also cross-checks that
the two backends produce bit-identical statistics before timing them.

Usage:  python benchmarks/bench_backends.py [--nodes N] [--steps K]
"""

import argparse
import time

import numpy as np

import eda_lab.infchain as infchain
import eda_lab.tergm as tergm
from eda_lab._kernels import BACKEND, get_backend
from eda_lab.infchain import RSpec, simulate_R
from eda_lab.net import DurationSpec, Network
from eda_lab.stats import Model, Term
from eda_lab.tergm import TergmSpec, bernoulli_network, simulate_tergm


def _with_backend(module, name, fn):
    saved = module.kernels
    module.kernels = get_backend(name)
    try:
        return fn()
    finally:
        module.kernels = saved


def bench_tergm(n, steps, backend):
    model = Model([Term("edges"), Term("degree", 1)], np.array([-4.5, 0.3]))
    spec = TergmSpec(model, DurationSpec((15.0,), 1.0), proposals_per_phase=2000)
    init = bernoulli_network(n, 0.01, np.random.default_rng(0))

    def run():
        t0 = time.perf_counter()
        rec = simulate_tergm(spec, init, 100, steps, seed=1)
        return time.perf_counter() - t0, rec.stat_series

    return _with_backend(tergm, backend, run)


def bench_r(n, steps, backend):
    model = Model([Term("edges"), Term("degree", 1)], np.array([-4.5, 0.3]))
    spec = RSpec(model, (15.0,), proposal="random_toggle", safety=2.0)

    def run():
        t0 = time.perf_counter()
        rec = simulate_R(spec, Network(n), steps, seed=1, thin=100)
        return time.perf_counter() - t0, rec.stat_series

    return _with_backend(infchain, backend, run)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=100)
    ap.add_argument("--steps", type=int, default=2000,
                    help="time steps for the discrete simulator")
    ap.add_argument("--r-steps", type=int, default=2_000_000,
                    help="steps for the small-time-step chain")
    args = ap.parse_args()

    backends = ["pure"]
    try:
        get_backend("fast")
        backends.append("fast")
    except ImportError:
        print("compiled backend unavailable; timing the pure backend only")
    print(f"default backend at import: {BACKEND}\n")

    for label, fn, steps in (
        ("discrete simulator", bench_tergm, args.steps),
        ("small-time-step chain", bench_r, args.r_steps),
    ):
        results = {}
        for b in backends:
            elapsed, series = fn(args.nodes, steps, b)
            results[b] = (elapsed, series)
            rate = steps / elapsed
            print(f"{label:>24} [{b:>4}]: {elapsed:8.3f}s  "
                  f"({rate:,.0f} steps/s)")
        if len(results) == 2:
            (tp, sp), (tf, sf) = results["pure"], results["fast"]
            match = np.array_equal(sp, sf)
            print(f"{'':>24} speedup: {tp / tf:.1f}x, "
                  f"identical output: {match}")
            if not match:
                raise SystemExit("backend outputs diverged")
        print()


if __name__ == "__main__":
    main()
