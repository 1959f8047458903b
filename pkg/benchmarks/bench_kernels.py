"""Compare the numba and numpy kernel backends on the hot loops.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 20000]

Each kernel runs once untimed (numba compilation), then the best of
``--repeat`` runs is reported together with the speedup and the largest
disagreement between the two backends.
"""

import argparse
import time

import numpy as np

from newhouse_lab.kernels import get_backend
from newhouse_lab.skew import make_bc


def _best(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _diff(a, b):
    if isinstance(a, tuple):
        return max(_diff(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    both = np.isfinite(a) & np.isfinite(b)
    return float(np.max(np.abs(a[both] - b[both]))) if both.any() else 0.0


def cases(size, seed=0):
    rng = np.random.default_rng(seed)
    F = make_bc(0.6, 5)
    th = F.theta
    xs = rng.uniform(-1.0, 1.0, size)
    xs[xs == 0.0] = 0.5
    ys = rng.uniform(0.0, 1.0, size)
    sides = np.zeros(size)
    keys = rng.integers(0, 1000, 8 * size).astype(np.int64)
    la = np.log(rng.uniform(0.1, 2.0, 200))
    vals = rng.random(8 * size)
    starts = rng.integers(0, 4 * size, size).astype(np.int64)
    stops = starts + rng.integers(0, 4 * size, size).astype(np.int64)
    return {
        "iterate_batch (20 steps)": lambda k: k.iterate_batch(th, xs, ys, sides, 20),
        "strip_entry (60 steps)": lambda k: k.strip_entry(th, xs, ys, sides, 60, 0.05),
        "cone_batch (N=60)": lambda k: k.cone_batch(th, xs[: size // 4], ys[: size // 4], 60, 2, 0.5,
                                                    0.3000000001, 0.9),
        "orbit_trace (10^5 steps)": lambda k: k.orbit_trace(th, 0.3, 0.4, 0.0, 100_000)[:2],
        "bridge_blockers": lambda k: k.bridge_blockers(keys),
        "pliss_margins x500": lambda k: [k.pliss_margins(la, np.log(0.9)) for _ in range(500)][-1],
        "range_sums": lambda k: k.range_sums(vals, starts, stops),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=20000)
    args = ap.parse_args(argv)
    nb, npk = get_backend("numba"), get_backend("numpy")
    print(f"{'kernel':28s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in cases(args.size).items():
        t_nb, out_nb = _best(lambda: fn(nb), args.repeat)
        t_np, out_np = _best(lambda: fn(npk), args.repeat)
        print(f"{name:28s} {1e3 * t_nb:11.2f} {1e3 * t_np:11.2f} {t_np / t_nb:8.1f} "
              f"{_diff(out_nb, out_np):10.2e}")


if __name__ == "__main__":
    main()
