#!/usr/bin/env python3
"""Benchmark the grid kernels: compiled extension vs numpy fallback.

Runs every kernel on identical randomized workloads for each available
backend, reports wall time per call and the speedup of the compiled
extension, and cross-checks that both backends produce the same numbers
(max absolute difference per kernel).

Usage: python3 benchmarks/bench_kernels.py [--size 256] [--repeats 200]
"""

import argparse
import math
import time

import numpy as np

from tfftrack import kernels


def make_workloads(size, repeats, seed):
    rng = np.random.default_rng(seed)
    motions = []
    for _ in range(repeats):
        ax, ay, bx, by = rng.uniform(5, size - 5, size=4)
        lam = math.hypot(bx - ax, by - ay)
        if lam < 1e-6:
            bx += 3.0
            lam = math.hypot(bx - ax, by - ay)
        motions.append((ax, ay, (bx - ax) / lam, (by - ay) / lam, lam,
                        rng.uniform(0.5, 4.0)))
    field = rng.normal(size=(size, size, 2))
    segments = rng.uniform(2, size - 2, size=(repeats, 4))
    points = rng.uniform(0, size - 1, size=(repeats, 2))
    discs = rng.uniform(5, size - 5, size=(repeats, 3))
    discs[:, 2] = rng.uniform(2.0, 8.0, size=repeats)
    return motions, field, segments, points, discs


def bench_one(impl, size, motions, field, segments, points, discs):
    """Run every kernel once per workload item; return times and outputs."""
    times = {}
    outputs = {}

    sums = np.zeros((size, size, 2))
    counts = np.zeros((size, size), dtype=np.int32)
    start = time.perf_counter()
    for ax, ay, vx, vy, lam, sigma in motions:
        impl.ribbon_accumulate(sums, counts, ax, ay, vx, vy, lam, sigma,
                               vx, vy)
    times["ribbon_accumulate"] = time.perf_counter() - start
    outputs["ribbon_accumulate"] = (sums, counts.astype(float))

    start = time.perf_counter()
    sampled = [impl.sample_bilinear(field, x, y) for x, y in points]
    times["sample_bilinear"] = time.perf_counter() - start
    outputs["sample_bilinear"] = np.asarray(sampled)

    start = time.perf_counter()
    integrals = [impl.line_integral(field, ax, ay, bx, by, 10)
                 for ax, ay, bx, by in segments]
    times["line_integral"] = time.perf_counter() - start
    outputs["line_integral"] = np.asarray(integrals)

    grid = np.zeros((size, size))
    start = time.perf_counter()
    for cx, cy, r in discs:
        impl.gaussian_peak_max(grid, cx, cy, r, 0.9)
    times["gaussian_peak_max"] = time.perf_counter() - start
    outputs["gaussian_peak_max"] = grid

    sums = np.zeros((size, size, 2))
    counts = np.zeros((size, size), dtype=np.int32)
    start = time.perf_counter()
    for cx, cy, r in discs:
        impl.disc_accumulate(sums, counts, cx, cy, r, 1.0, -1.0)
    times["disc_accumulate"] = time.perf_counter() - start
    outputs["disc_accumulate"] = (sums, counts.astype(float))

    return times, outputs


def max_abs_diff(a, b):
    if isinstance(a, tuple):
        return max(max_abs_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=256,
                        help="grid side length (default: %(default)s)")
    parser.add_argument("--repeats", type=int, default=200,
                        help="calls per kernel (default: %(default)s)")
    parser.add_argument("--seed", type=int, default=0,
                        help="workload seed (default: %(default)s)")
    args = parser.parse_args()

    names = kernels.available_backends()
    workloads = make_workloads(args.size, args.repeats, args.seed)
    results = {}
    for name in names:
        impl = kernels.get_backend(name)
        results[name] = bench_one(impl, args.size, *workloads)

    kernel_names = list(results[names[0]][0])
    print(f"grid {args.size}x{args.size}, {args.repeats} calls per kernel, "
          f"backends: {', '.join(names)}")
    header = f"{'kernel':<20}" + "".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}{'max diff':>12}"
    print(header)
    for kernel in kernel_names:
        row = f"{kernel:<20}"
        for name in names:
            per_call = results[name][0][kernel] / args.repeats
            row += f"{per_call * 1e6:>10.1f}us"
        if len(names) == 2:
            fast, slow = names[0], names[1]
            ratio = results[slow][0][kernel] / results[fast][0][kernel]
            diff = max_abs_diff(results[names[0]][1][kernel],
                                results[names[1]][1][kernel])
            row += f"{ratio:>9.1f}x{diff:>12.2e}"
        print(row)


if __name__ == "__main__":
    main()
