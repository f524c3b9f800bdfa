"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_backends.py [--repeat 3]

Each case runs once per backend (best of ``--repeat``) and checks that
both backends return the same numbers.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from hittimes import _backend
from hittimes.boundaries import Boundary, StripProblem
from hittimes.montecarlo import SimConfig, simulate_pair
from hittimes.process import Process
from hittimes.volterra import TimeGrid, restart_densities, solve_two_boundary

BM = Process.standard_bm()


def case_constant():
    sp = StripProblem(BM, Boundary.constant(-1.0), Boundary.constant(2.0))
    pair = solve_two_boundary(sp, TimeGrid.covering(0.0, 0.01, 20.0))
    return np.concatenate([pair.g_lower, pair.g_upper])


def case_cosine():
    sp = StripProblem(BM, Boundary.cosine(-1.0, 0.1, math.pi, math.pi),
                      Boundary.cosine(1.0, 0.1, math.pi))
    pair = solve_two_boundary(sp, TimeGrid.covering(0.0, 0.01, 10.0))
    return np.concatenate([pair.g_lower, pair.g_upper])


def case_restart():
    lo = Boundary.cosine(-1.0, 0.1, math.pi, math.pi)
    up = Boundary.cosine(1.0, 0.1, math.pi)
    return restart_densities(BM, lo, up, TimeGrid.covering(0.0, 0.02, 4.0)).ravel()


def case_monte_carlo():
    sp = StripProblem(BM, Boundary.constant(-1.0), Boundary.constant(2.0))
    s = simulate_pair(sp, SimConfig(2000, 1e-3, 5.0, seed=11))
    return np.concatenate([s.t_lower, s.t_upper])


CASES = {
    "volterra constant, 2000 knots": case_constant,
    "volterra cosine, 1000 knots": case_cosine,
    "restart family, 200 knots": case_restart,
    "monte carlo, 2000 paths x 5000 steps": case_monte_carlo,
}


def best_of(fn, repeat):
    best, out = math.inf, None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if "compiled" not in _backend.available():
        print("compiled core not built; only the numpy fallback is available")
        return 1
    print(f"{'case':40s} {'compiled':>10s} {'python':>10s} {'speedup':>8s}  max |diff|")
    prev = _backend.name
    try:
        for name, fn in CASES.items():
            _backend.set_backend("compiled")
            tc, oc = best_of(fn, args.repeat)
            _backend.set_backend("python")
            tp, op = best_of(fn, args.repeat)
            diff = float(np.max(np.abs(oc - op)))
            print(f"{name:40s} {tc:9.4f}s {tp:9.4f}s {tp / tc:7.1f}x  {diff:.2e}")
    finally:
        _backend.set_backend(prev)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
