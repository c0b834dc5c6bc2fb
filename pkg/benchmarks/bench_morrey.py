"""Compare the compiled and numpy ball-sum kernels on FN-norm workloads.

    python benchmarks/bench_morrey.py [--repeat 3] [--json out.json]
"""
import argparse
import json
import time

import numpy as np

from fbmlab import kernels
from fbmlab.lp_analysis import DyadicPartition, NormParams, fbm_norm
from fbmlab.spectral_core import Grid, forward_transform

CASES = [(1, 4096), (2, 64), (2, 128), (3, 32)]


def _ball_inputs(grid, stride=4):
    """Kernel inputs for the densest dyadic block of a random field."""
    part = DyadicPartition(grid)
    f = forward_transform(np.random.default_rng(0).standard_normal(grid.shape), grid)
    g = np.fft.fftshift(part.phi(part.k_max) * f.coeffs)
    nz = np.nonzero(g)
    coords = np.ascontiguousarray(np.stack(nz, axis=1).astype(np.int64))
    weights = np.ascontiguousarray(np.abs(g[nz]) ** 4)
    axes = [np.arange(grid.N // 2 % stride, grid.N, stride)] * grid.n
    centers = np.ascontiguousarray(np.stack([c.ravel() for c in np.meshgrid(*axes, indexing="ij")], 1).astype(np.int64))
    diag = np.sqrt(grid.n) * grid.N
    radii = 2.0 ** np.arange(int(np.ceil(np.log2(diag + 1))) + 1)
    return coords, weights, centers, np.ascontiguousarray(radii * radii)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    compiled = kernels.BACKEND == "cython"
    rows = []
    print(f"compiled kernel available: {compiled}")
    print(f"{'n':>2} {'N':>5} {'points':>8} {'centers':>8} {'numpy s':>9} {'cython s':>9} {'speedup':>8} {'fn_norm s':>9}")
    for n, N in CASES:
        grid = Grid(n, N)
        inputs = _ball_inputs(grid)
        t_py, ref = best_of(lambda: kernels.ball_sums_py(*inputs), args.repeat)
        t_c, out = (best_of(lambda: kernels.ball_sums(*inputs), args.repeat) if compiled else (float("nan"), ref))
        if not np.array_equal(ref, out):
            raise SystemExit(f"backends disagree at n={n}, N={N}")
        f = forward_transform(np.random.default_rng(1).standard_normal(grid.shape), grid)
        t_fn, _ = best_of(lambda: fbm_norm(f, DyadicPartition(grid), NormParams(4.0, 0.5 * n, np.inf, 0.0)), 1)
        row = {"n": n, "N": N, "points": len(inputs[0]), "centers": len(inputs[2]), "numpy_s": t_py,
               "cython_s": t_c, "speedup": t_py / t_c if compiled else None, "fn_norm_s": t_fn}
        rows.append(row)
        sp = f"{row['speedup']:.1f}x" if compiled else "-"
        print(f"{n:>2} {N:>5} {row['points']:>8} {row['centers']:>8} {t_py:>9.4f} {t_c:>9.4f} {sp:>8} {t_fn:>9.4f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"backend": kernels.BACKEND, "rows": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
