"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 1000 2500] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from iterfunc._backend import get_backend
from iterfunc.kernel import SmoothedDistribution, fallback_bandwidth


def cases(n, rng):
    data = rng.uniform(size=n) ** (2.0 / 3.0)
    h = fallback_bandwidth(data) * 0.5
    q = np.linspace(0.0, 1.0, 400)
    alpha = np.linspace(0.005, 0.995, 199)
    hs = np.geomspace(0.05, 2.0, 30) * fallback_bandwidth(data)
    grid = np.linspace(data.min() - 0.2, data.max() + 0.2, 513)
    qw = np.full(grid.size, grid[1] - grid[0])
    return data, h, q, alpha, hs, grid, qw


def run(n, repeat):
    rng = np.random.default_rng(0)
    data, h, q, alpha, hs, grid, qw = cases(n, rng)
    x = np.sort(data)
    rows = []
    for name in ("cython", "python"):
        try:
            be = get_backend(name)
        except ImportError:
            print(f"{name}: not available")
            continue
        d = SmoothedDistribution(data, h, backend=be)
        d.quantile(0.5)  # build the lookup table outside the timing
        jobs = {
            "cdf (400 points)": lambda: d.cdf(q),
            "density (400 points)": lambda: d.density(q),
            "quantile (199 levels)": lambda: d.quantile(alpha),
            "cv scores (30 bandwidths)": lambda: be.cv_scores(x, hs, grid, qw),
        }
        for label, fn in jobs.items():
            t = min(timeit.repeat(fn, number=1, repeat=repeat))
            rows.append((n, name, label, t))
    return rows


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, nargs="+", default=[1000, 2500])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    print(f"{'n':>6}  {'backend':<8} {'kernel':<28} {'seconds':>10}")
    for n in args.n:
        rows = run(n, args.repeat)
        for n_, name, label, t in rows:
            print(f"{n_:>6}  {name:<8} {label:<28} {t:>10.5f}")
        by = {(r[1], r[2]): r[3] for r in rows}
        for label in sorted({r[2] for r in rows}):
            if ("cython", label) in by and ("python", label) in by:
                print(f"{'':>6}  speedup  {label:<28} {by[('python', label)] / by[('cython', label)]:>9.1f}x")


if __name__ == "__main__":
    main()
