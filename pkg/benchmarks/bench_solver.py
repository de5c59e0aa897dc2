#!/usr/bin/env python3
"""Benchmark the compiled coordinate-descent kernel against the pure-numpy
fallback on representative solver workloads.

Usage: python benchmarks/bench_solver.py [--repeats N] [--quick]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from taplasso import _cd_py
from taplasso.dictionary import (
    CorrelatorConfig,
    GridConfig,
    decimate_dictionary,
    make_dictionary,
)
from taplasso.simulator import PeakSpec, ReplicaBank, SnapshotParams, simulate_snapshot

try:
    from taplasso import _cd_fast
except ImportError:
    _cd_fast = None

LAM = 0.3009
TOL = 1e-8
MAX_SWEEPS = 200_000


def build_workloads(quick: bool):
    """(name, list of (M, y) problems) pairs resembling production solves."""
    rng = np.random.default_rng(17)
    workloads = []

    random_probs = []
    for _ in range(8 if quick else 32):
        n, p = int(rng.integers(5, 9)), int(rng.integers(8, 13))
        random_probs.append((rng.standard_normal((n, p)), rng.standard_normal(n)))
    workloads.append(("random 8x12-ish", random_probs))

    for delta_el, tag in ((1.0, "11-tap"), (1.6, "17-tap")):
        config = CorrelatorConfig(delta_el=delta_el, d=0.1, fs=25e6, T=1e-3, prn=1)
        bank = ReplicaBank(config)
        d1 = make_dictionary(config, GridConfig(1), code=bank.code, bank=bank.C)
        W = bank.whitener
        WM = W @ d1.M
        probs = []
        for t in range(4 if quick else 16):
            params = SnapshotParams(
                authentic=PeakSpec(0.0),
                spoofer=PeakSpec(0.34, 10 ** (-0.3)),
                cnr_dbhz=50.0,
                config=config,
                seed=t,
            )
            y = simulate_snapshot(params, bank).taps
            probs.append((WM, W @ np.ascontiguousarray(y.real)))
            probs.append((WM, W @ np.ascontiguousarray(y.imag)))
        workloads.append((f"whitened square ({tag})", probs))

    config = CorrelatorConfig(delta_el=1.0, d=0.1, fs=25e6, T=1e-3, prn=1)
    bank = ReplicaBank(config)
    d5 = make_dictionary(config, GridConfig(5), code=bank.code, bank=bank.C)
    subs = decimate_dictionary(d5)
    W = bank.whitener
    probs = []
    for t in range(2 if quick else 8):
        params = SnapshotParams(
            authentic=PeakSpec(0.0),
            spoofer=PeakSpec(0.34, 10 ** (-0.3)),
            cnr_dbhz=50.0,
            config=config,
            seed=100 + t,
        )
        y = simulate_snapshot(params, bank).taps
        for block in subs:
            probs.append((W @ block.M, W @ np.ascontiguousarray(y.real)))
            probs.append((W @ block.M, W @ np.ascontiguousarray(y.imag)))
    workloads.append(("multi-block Fp=5 trial", probs))
    return workloads


def run_backend(kernel, probs):
    total_sweeps = 0
    start = time.perf_counter()
    for M, y in probs:
        Mf = np.asfortranarray(M)
        beta, sweeps, kkt, converged, _ = kernel.cd_lasso(
            Mf, np.ascontiguousarray(y), LAM, TOL, MAX_SWEEPS
        )
        assert converged, f"kkt residual {kkt}"
        total_sweeps += sweeps
    return time.perf_counter() - start, total_sweeps


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=3, help="timing repeats, best kept")
    ap.add_argument("--quick", action="store_true", help="smaller problem sets")
    args = ap.parse_args()

    backends = [("python", _cd_py)]
    if _cd_fast is not None:
        backends.insert(0, ("cython", _cd_fast))
    else:
        print("compiled kernel not available; timing the fallback only\n")

    print(f"{'workload':28s} {'solves':>7s} " +
          " ".join(f"{name + ' (ms/solve)':>20s}" for name, _ in backends) +
          ("  speedup" if len(backends) == 2 else ""))
    for name, probs in build_workloads(args.quick):
        per_solve = {}
        for bname, kernel in backends:
            best = min(
                run_backend(kernel, probs)[0] for _ in range(args.repeats)
            )
            per_solve[bname] = best / len(probs) * 1e3
        row = f"{name:28s} {len(probs):7d} " + " ".join(
            f"{per_solve[bname]:20.3f}" for bname, _ in backends
        )
        if len(backends) == 2:
            row += f"  {per_solve['python'] / per_solve['cython']:7.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
