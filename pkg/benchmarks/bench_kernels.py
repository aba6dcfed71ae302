#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the three hot loops (DSI ray voting, region growing, weighted
depth fill) on realistic workload sizes and prints a speedup table.
Also cross-checks that both backends agree on the results.

Usage: python benchmarks/bench_kernels.py [--events N] [--repeat K]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from evfuse._kernels import py_backend

try:
    from evfuse._kernels import _native as native
except ImportError:
    native = None


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_vote_rays(rng, n_events, repeat):
    origins = np.ascontiguousarray(rng.normal(scale=0.05, size=(n_events, 3)))
    dirs = rng.normal(scale=0.3, size=(n_events, 3))
    dirs[:, 2] += 1.0
    dirs = np.ascontiguousarray(dirs)
    depths = 1.0 / np.linspace(1 / 0.3, 1 / 2.0, 100)
    rows = []
    results = {}
    for name, backend in backends():
        counts = np.zeros((180, 240, 100), dtype=np.uint32)
        t, total = timeit(
            lambda: backend.vote_rays(
                origins, dirs, depths, 200.0, 200.0, 120.0, 90.0, 1.0, 1.0, counts
            ),
            repeat,
        )
        results[name] = counts
        rows.append((name, t, f"{total} votes"))
    if len(results) == 2:
        assert np.array_equal(results["native"], results["numpy"]), "vote mismatch"
    return f"vote_rays ({n_events} events x 100 planes)", rows


def bench_grow_labels(rng, repeat):
    img = (rng.integers(0, 24, size=(180, 240)) * 10).astype(np.int32)
    rows = []
    results = {}
    for name, backend in backends():
        labels = np.zeros(img.shape, dtype=np.int32)
        t, n = timeit(lambda: backend.grow_labels(img, 12.0, 4, labels), repeat)
        results[name] = labels.copy()
        rows.append((name, t, f"{n} regions"))
    if len(results) == 2:
        assert np.array_equal(results["native"], results["numpy"]), "label mismatch"
    return "grow_labels (240x180 frame)", rows


def bench_weighted_fill(rng, repeat):
    n_px, n_seed = 20000, 1500
    py = rng.integers(0, 180, n_px).astype(np.int64)
    px = rng.integers(0, 240, n_px).astype(np.int64)
    my = rng.integers(0, 180, n_seed).astype(np.int64)
    mx = rng.integers(0, 240, n_seed).astype(np.int64)
    depth = rng.uniform(0.3, 3.0, n_seed)
    rows = []
    results = {}
    for name, backend in backends():
        t, out = timeit(lambda: backend.weighted_fill(py, px, my, mx, depth, 0, 5.0), repeat)
        results[name] = out
        rows.append((name, t, f"{n_px} pixels x {n_seed} seeds"))
    if len(results) == 2:
        assert np.allclose(results["native"], results["numpy"], rtol=1e-12), "fill mismatch"
    return "weighted_fill (inverse kernel)", rows


def backends():
    out = [("numpy", py_backend)]
    if native is not None:
        out.insert(0, ("native", native))
    return out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--events", type=int, default=500_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    if native is None:
        print("compiled backend unavailable; timing the NumPy fallback only\n")
    rng = np.random.default_rng(42)
    benches = [
        bench_vote_rays(rng, args.events, args.repeat),
        bench_grow_labels(rng, args.repeat),
        bench_weighted_fill(rng, args.repeat),
    ]
    for title, rows in benches:
        print(title)
        numpy_time = rows[-1][1]  # numpy row is always last
        for name, t, note in rows:
            speedup = f"  ({numpy_time / t:4.1f}x vs numpy)" if name == "native" else ""
            print(f"  {name:7s} {t * 1e3:9.2f} ms{speedup}   {note}")
        print()


if __name__ == "__main__":
    main()
