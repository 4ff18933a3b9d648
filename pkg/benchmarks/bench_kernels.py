#!/usr/bin/env python3
"""Benchmark the jitted kernels against their pure-numpy originals.

The dispatched names in mbsfuse.kernels are numba-compiled unless
MBSFUSE_NUMBA=0 (or numba is missing); the uncompiled originals stay
reachable via kernels.PY_IMPLS, so both paths can be timed in one
process. Also times one full scenario run per scheme as an end-to-end
number.

Usage: python benchmarks/bench_kernels.py [--iters 2000]
"""

import argparse
import time

import numpy as np

from mbsfuse import analysis, kernels, sim
from mbsfuse.fusion import SchemeId


def time_fn(fn, args, iters):
    fn(*args)  # warm-up (triggers JIT compile on the numba path)
    t0 = time.perf_counter()
    for _ in range(iters):
        fn(*args)
    return (time.perf_counter() - t0) / iters


def kernel_cases(rng):
    mean = rng.normal(0, 10, 4)
    a = rng.normal(0, 1, (4, 4))
    cov = a @ a.T + 0.5 * np.eye(4)
    phi = np.eye(4)
    phi[0, 2] = phi[1, 3] = 0.5
    gqg = 0.1 * np.eye(4)
    bs = rng.uniform(-300, 300, (4, 2))
    bs3 = np.column_stack([bs, np.full(4, 10.0)])
    h = rng.normal(0, 1, (8, 4))
    r8 = np.diag(rng.uniform(0.01, 0.1, 8))
    resid = rng.normal(0, 1, 8)
    pts = mean + rng.normal(0, 1, (9, 4))
    zpts = rng.normal(0, 1, (9, 8))
    wm = np.full(9, 1 / 9)
    z = rng.normal(0, 1, 8)
    mask = np.zeros(8, dtype=bool)
    mask[1::2] = True
    return {
        "wrap_angles": (rng.uniform(-10, 10, 64),),
        "predict_cv": (mean, cov, phi, gqg),
        "gain_update": (mean, cov, resid, h, r8),
        "stack_pred": (mean, bs, True),
        "stack_jac": (mean, bs, True),
        "fix_stack": (bs3, rng.uniform(20, 300, 4), rng.uniform(-3, 3, 4), 2.0),
        "ut_update": (mean, cov, pts, zpts, wm, wm.copy(), z, r8, mask),
    }


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--iters", type=int, default=2000)
    args = parser.parse_args()

    print(f"numba backend active: {kernels.NUMBA_ENABLED}")
    if not kernels.NUMBA_ENABLED:
        print("(both columns run the pure-numpy implementations)")
    rng = np.random.default_rng(7)
    cases = kernel_cases(rng)

    print(f"\n{'kernel':<14} {'dispatched':>12} {'pure numpy':>12} {'speedup':>9}")
    for name, case_args in cases.items():
        fast = time_fn(getattr(kernels, name), case_args, args.iters)
        slow = time_fn(kernels.PY_IMPLS[name], case_args, args.iters)
        print(
            f"{name:<14} {fast * 1e6:>10.2f}us {slow * 1e6:>10.2f}us {slow / fast:>8.2f}x"
        )

    print("\nend-to-end: default noisy scenario, gate on")
    cfg = sim.ScenarioConfig()
    _, _, frames = sim.build_scenario(cfg, "noisy")
    for scheme in (SchemeId.LC_KF, SchemeId.TC_EKF, SchemeId.TC_UKF):
        analysis.run_frames(frames, cfg.dt, scheme)  # warm-up
        t0 = time.perf_counter()
        analysis.run_frames(frames, cfg.dt, scheme)
        dt = time.perf_counter() - t0
        print(f"  {scheme.value:<9} {len(frames)} epochs in {dt:.2f} s "
              f"({1e6 * dt / len(frames):.0f} us/epoch)")


if __name__ == "__main__":
    main()
