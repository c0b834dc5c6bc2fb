"""Property suites shared by the ``check`` command and the test-suite."""
from __future__ import annotations

import math
import tempfile
import time
from pathlib import Path

import numpy as np

from .lp_analysis import DyadicPartition, bernstein_check, holder_young_check, paraproduct_decompose
from .spectral_core import (
    Grid, SpectralField, forward_transform, inverse_transform, inverse_transform_with_residue,
    read_snapshot, write_snapshot,
)


def partition_defect(grid: Grid) -> float:
    """max |sum_k phi_k - 1| over the resolved band."""
    part = DyadicPartition(grid)
    return float(np.max(np.abs(part.partition_sum()[part.resolved_mask] - 1.0)))


def annulus_field(grid: Grid, rng: np.random.Generator, lo: float, hi: float) -> SpectralField:
    """Real random field with spectrum in lo <= |xi| <= hi (Nyquist row excluded)."""
    f = forward_transform(rng.standard_normal(grid.shape), grid)
    r = grid.abs_xi
    keep = (r >= lo) & (r <= hi) & ~grid.nyquist_mask
    return f.with_coeffs(f.coeffs * keep)


def bernstein_sweep(grid: Grid, js=range(2, 7), fields_per_j: int = 50, seed: int = 0,
                    alpha=None, p: float = 2.0, q: float = 2.0, mu1: float = 0.5, mu2: float = 0.5,
                    stride: int = 4) -> dict:
    """Bernstein ratios on random annulus fields 3/4 2^j <= |xi| <= 8/3 2^j."""
    alpha = (1,) * grid.n if alpha is None else alpha
    per_j = {}
    for j in js:
        rng = np.random.default_rng([seed, j])
        lo, hi = 0.75 * 2.0 ** j, 8.0 / 3.0 * 2.0 ** j
        ratios = [bernstein_check(annulus_field(grid, rng, lo, hi), alpha, p, q, mu1, mu2, j, stride=stride)["ratio"]
                  for _ in range(fields_per_j)]
        per_j[j] = ratios
    every = [r for v in per_j.values() for r in v]
    calib = max(per_j[min(per_j)])
    return {
        "ratios": per_j,
        "max": max(every),
        "min": min(every),
        "spread": max(every) / min(every),
        "calibration": calib,
        "max_over_calibration": max(every) / calib,
    }


def band_limited_field(grid: Grid, rng: np.random.Generator, part: DyadicPartition | None = None) -> SpectralField:
    """Real random field supported in the resolved band, up to a random upper radius."""
    part = DyadicPartition(grid) if part is None else part
    lo = 4.0 / 3.0 * 2.0 ** part.k_min
    top = 0.75 * 2.0 ** part.k_max
    hi = lo * 2.0 ** rng.uniform(1, math.log2(top / lo)) if top > 2 * lo else top
    f = forward_transform(rng.standard_normal(grid.shape), grid)
    keep = (grid.abs_xi >= lo) & (grid.abs_xi <= hi)
    return f.with_coeffs(f.coeffs * keep)


def paraproduct_sweep(grid: Grid, pairs: int = 100, seed: int = 0) -> dict:
    """Relative error of T_f g + T_g f + R(f, g) against f g on pairs supported in the resolved band."""
    part = DyadicPartition(grid)
    errs = []
    for i in range(pairs):
        rng = np.random.default_rng([seed, i])
        f, g = band_limited_field(grid, rng, part), band_limited_field(grid, rng, part)
        tfg, tgf, rem = paraproduct_decompose(f, g, part)
        lhs = inverse_transform(tfg + tgf + rem)
        rhs = inverse_transform(f) * inverse_transform(g)
        errs.append(float(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(rhs)), 1e-300)))
    return {"errors": errs, "max_error": max(errs)}


def random_exponents(rng: np.random.Generator, n: int) -> dict:
    p1, p2 = rng.uniform(2.0, 8.0, 2)
    mu1, mu2 = rng.uniform(0.0, n, 2) * 0.999
    p3 = 1.0 / (1.0 / p1 + 1.0 / p2)
    mu3 = p3 * (mu1 / p1 + mu2 / p2)
    return {"p1": p1, "mu1": mu1, "p2": p2, "mu2": mu2, "p3": p3, "mu3": mu3,
            "p": rng.uniform(1.0, 8.0), "mu": rng.uniform(0.0, n) * 0.999}


def holder_young_sweep(trials: int = 1000, seed: int = 0, size: int = 24, kernel: int = 6) -> dict:
    """Random arrays (n = 1 and n = 2 alternately) and random valid exponent tuples."""
    violations, worst = [], 0.0
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        n = 1 + i % 2
        shape = (size,) * n if n == 1 else (size // 2,) * n
        kshape = (kernel,) * n if n == 1 else (kernel // 2,) * n
        f, g = rng.standard_normal(shape), rng.standard_normal(shape)
        g = g * (rng.random(shape) < rng.uniform(0.2, 1.0))  # sparse supports stress small balls
        phi = rng.standard_normal(kshape)
        prm = random_exponents(rng, n)
        dxi = 2.0 ** rng.integers(-2, 3)
        res = holder_young_check(f, g, phi, prm, dxi)
        for kind in ("holder", "young"):
            r = res[kind]
            if r["rhs"] > 0:
                worst = max(worst, r["lhs"] / r["rhs"])
            if not r["ok"]:
                violations.append({"trial": i, "kind": kind, **prm, "lhs": r["lhs"], "rhs": r["rhs"]})
    return {"trials": trials, "violations": violations, "worst_ratio": worst}


def roundtrip_defects(grid: Grid, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(grid.shape)
    back, residue = inverse_transform_with_residue(forward_transform(x, grid))
    f = forward_transform(x, grid, 0.25)
    with tempfile.TemporaryDirectory() as tmp:
        g, _ = read_snapshot(write_snapshot(Path(tmp) / "f.fbm", f, 0.8, 0.5))
    return {
        "fft_roundtrip": float(np.max(np.abs(back - x))),
        "imag_residue": residue,
        "snapshot_roundtrip": float(np.max(np.abs(g.coeffs - f.coeffs))) + abs(g.time_tag - f.time_tag),
    }


def run_suite(n: int = 1, N: int = 64, seed: int = 0, quick: bool = True) -> dict:
    """Run every property suite and return per-suite results with pass flags."""
    grid = Grid(n, N)
    out = {}

    def timed(name, fn, ok):
        t0 = time.perf_counter()
        res = fn()
        res = res if isinstance(res, dict) else {"value": res}
        res["seconds"] = time.perf_counter() - t0
        res["passed"] = bool(ok(res))
        out[name] = res

    timed("partition_of_unity", lambda: {"max_defect": partition_defect(grid)}, lambda r: r["max_defect"] <= 1e-12)
    bern_grid = grid if n > 1 else Grid(1, max(N, 256))
    top_j = int(math.floor(math.log2(bern_grid.nyquist * 3 / 8)))
    timed("bernstein", lambda: bernstein_sweep(bern_grid, range(2, max(3, top_j) + 1), 10 if quick else 50, seed),
          lambda r: r["spread"] <= 10)
    timed("paraproduct", lambda: paraproduct_sweep(grid, 20 if quick else 100, seed), lambda r: r["max_error"] <= 1e-10)
    timed("holder_young", lambda: holder_young_sweep(100 if quick else 1000, seed),
          lambda r: not r["violations"])
    timed("roundtrip", lambda: roundtrip_defects(grid, seed),
          lambda r: r["fft_roundtrip"] <= 1e-12 and r["snapshot_roundtrip"] == 0)
    return out
