"""Time the compiled and pure-Python kernels on the same workload.

    python3 benchmarks/bench_kernels.py [--nodes 6001] [--steps 2000]
"""
import argparse
import time

import numpy as np

from twopatch import kernels
from twopatch.evolve import max_stable_dt
from twopatch.grid import build_grid
from twopatch.params import PatchParams
from twopatch.reaction import logistic


def bench_advance(backend, nodes, steps, repeat):
    h = 0.05
    half = (nodes - 1) // 2 * h
    grid = build_grid(-half, half, h)
    p = PatchParams(1.0, 0.5, 1.0, logistic(1.0, 1.0), logistic(1.2, 2.0))
    dt = max_stable_dt(grid, p, 0.4)
    u0 = 0.5 * (1 - np.tanh(grid.x))
    cl = p.reaction_left.coef_array
    cr = p.reaction_right.coef_array
    best = np.inf
    for _ in range(repeat):
        u = u0.copy()
        t0 = time.perf_counter()
        kernels.advance(u, steps, dt, h, p.d1, p.d2, p.sigma, grid.index_zero, cl, cr,
                        0, 1.0, 0, 0.0, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, u


def bench_wave(backend, steps, repeat):
    coef = logistic(1.0, 1.0).coef_array
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = kernels.rk4_wave(1e-8, -0.5e-8, -0.00125, steps, 4, 2.5, 1.0, coef, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, out[0]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=6001)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = [b for b in ("compiled", "python") if b in kernels.BACKENDS]
    print(f"default backend: {kernels.BACKEND}")
    res = {}
    for b in names:
        t, u = bench_advance(b, args.nodes, args.steps, args.repeat)
        tw, phi = bench_wave(b, 16_000, args.repeat)
        res[b] = (u, phi)
        per = t / args.steps * 1e6
        print(f"{b:9s} advance: {t:8.4f} s  ({per:7.1f} us/step, {args.nodes} nodes)   "
              f"rk4_wave: {tw:8.4f} s")
    if len(res) == 2:
        du = np.max(np.abs(res["compiled"][0] - res["python"][0]))
        dp = np.max(np.abs(res["compiled"][1] - res["python"][1]))
        print(f"max |compiled - python|: advance {du:.2e}, rk4_wave {dp:.2e}")


if __name__ == "__main__":
    main()
