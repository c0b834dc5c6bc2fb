"""Experiment harnesses: truncated homogeneous data, sampled bilinear constant,
dyadic rescaling, self-similar collapse and asymptotic stability."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .lp_analysis import DyadicPartition, FNNorm, NormParams
from .solver import RunRecord, TimeStepConfig, _jsonable, bilinear_term, etd_integrate
from .spectral_core import Grid, Semigroup, SpectralField, forward_transform
from .symbols import CouplingSymbol, builtin_symbol, check_homogeneity


@dataclass
class ExperimentReport:
    experiment: str
    params: dict
    metrics: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.provenance:
            blob = json.dumps(_jsonable(self.params), sort_keys=True).encode()
            self.provenance = {"config_hash": hashlib.sha256(blob).hexdigest()[:16], "code_version": __version__}

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.verdicts.values())

    def to_json(self) -> dict:
        return _jsonable({
            "experiment": self.experiment, "params": self.params, "metrics": self.metrics,
            "verdicts": self.verdicts, "passed": self.passed, "provenance": self.provenance,
        })

    def save(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "report.json").write_text(json.dumps(self.to_json(), indent=2, sort_keys=True))
        series = self.metrics.get("series", {})
        if "t" in series:
            cols = ["t"] + [c for c in ("fn_norm", "l2_norm", "diff_norm", "proxy_norm") if c in series]
            with open(directory / "metrics.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(cols)
                for row in zip(*(series[c] for c in cols)):
                    w.writerow([repr(float(v)) for v in row])
        return directory


# ---------------------------------------------------------------------------
# data


def make_truncated_homogeneous_data(delta: float, R: float, mode: str, grid: Grid, gamma: float, beta: float,
                                    angular: float = 0.0) -> SpectralField:
    """delta |xi|^{-(n - (2 gamma - beta))} restricted to |xi| < R (lowpass) or |xi| > R (highpass).

    ``angular`` multiplies by 1 + angular * cos(2 arg(xi_1 + i xi_2)) when n >= 2;
    the profile stays homogeneous of the same degree and real/even.
    """
    top = math.sqrt(grid.n) * grid.nyquist
    if not grid.dxi < R <= top:
        raise ConfigError(f"ic.R1={R} outside the lattice band ({grid.dxi:.6g}, {top:.6g}]")
    if not delta > 0:
        raise ConfigError(f"ic.delta must be positive, got {delta}")
    if mode not in ("lowpass", "highpass"):
        raise ConfigError(f"ic.mode must be lowpass or highpass, got {mode!r}")
    if not -1 < angular < 1:
        raise ConfigError(f"ic.angular must lie in (-1, 1), got {angular}")
    r = grid.abs_xi
    nz = r > 0
    expo = -(grid.n - (2 * gamma - beta))
    coeffs = np.zeros(grid.shape)
    coeffs[nz] = delta * r[nz] ** expo
    keep = (r < R) if mode == "lowpass" else (r > R)
    coeffs *= keep
    if angular and grid.n >= 2:
        ang = np.arctan2(grid.xi[1], grid.xi[0])
        coeffs *= 1.0 + angular * np.cos(2 * ang)
    return SpectralField(grid, coeffs.astype(complex))


def gaussian_bump(grid: Grid, amplitude: float, width: float, center=None, zero_mean: bool = True) -> SpectralField:
    """Physical-space Gaussian bump; smooth and effectively band-limited for width >> L/N."""
    xs = grid.coordinates()
    c = [grid.L / 2] * grid.n if center is None else list(center)
    r2 = sum((x - cc) ** 2 for x, cc in zip(xs, c))
    f = forward_transform(amplitude * np.exp(-0.5 * r2 / width ** 2), grid)
    if zero_mean:
        coeffs = f.coeffs.copy()
        coeffs[(0,) * grid.n] = 0.0
        f = f.with_coeffs(coeffs)
    return f


def single_mode(grid: Grid, k, amplitude: float = 1.0) -> SpectralField:
    """amplitude * cos(xi_k . x) for an integer lattice wavevector k."""
    xs = grid.coordinates()
    phase = sum(grid.dxi * kk * x for kk, x in zip(k, xs))
    return forward_transform(amplitude * np.cos(phase), grid)


def random_band_field(grid: Grid, rng: np.random.Generator, r_lo: float, r_hi: float, slope: float = 0.0) -> SpectralField:
    """Real random field with spectrum in r_lo <= |xi| <= r_hi times |xi|^-slope."""
    f = forward_transform(rng.standard_normal(grid.shape), grid)
    r = grid.abs_xi
    env = np.where((r >= r_lo) & (r <= r_hi) & (r > 0), np.where(r > 0, r, 1.0) ** (-slope), 0.0)
    return f.with_coeffs(f.coeffs * env * grid.dealias_mask)


def scale_to_norm(f: SpectralField, norm, target: float) -> SpectralField:
    current = norm(f)
    if current == 0:
        raise ConfigError("cannot rescale a field with zero norm")
    return f * (target / current)


# ---------------------------------------------------------------------------
# bilinear constant


def estimate_K(P: CouplingSymbol, gamma: float, np_: NormParams, trials: int, seed: int, grid: Grid,
               stride: int = 4, dealias: bool = True) -> dict:
    """Sampled lower bound for the bilinear constant.

    Inputs are held constant in time; for such paths sup_t ||B(theta, phi)(t)||
    is the t -> infinity limit ||Lambda^{-2 gamma} N(theta, phi)|| since each
    mode of B grows monotonically in t.
    """
    part = DyadicPartition(grid)
    norm = FNNorm(part, np_, stride)
    a = grid.abs_xi ** (2 * gamma)
    inv = np.zeros(grid.shape)
    inv[a > 0] = 1.0 / a[a > 0]
    cutoff = grid.nyquist * 2.0 / 3.0
    ratios, skipped = [], 0
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        pair = []
        for _ in range(2):
            lo = grid.dxi * 2.0 ** rng.uniform(0, max(0.0, math.log2(cutoff / grid.dxi) - 1))
            hi = min(cutoff, lo * 2.0 ** rng.uniform(1, 4))
            pair.append(random_band_field(grid, rng, lo, hi, rng.uniform(0, 2)))
        th, ph = pair
        nt, nph = norm(th), norm(ph)
        if nt == 0 or nph == 0:
            skipped += 1
            ratios.append(0.0)
            continue
        b = bilinear_term(th, ph, P, dealias)
        ratios.append(norm(b.with_coeffs(b.coeffs * inv)) / (nt * nph))
    k_est = max(ratios) if ratios else 0.0
    return {
        "K_est": k_est,
        "ratios": ratios,
        "skipped": skipped,
        "trials": trials,
        "seed": seed,
        "epsilon": 0.2 / (4 * k_est) if k_est > 0 else math.inf,
    }


# ---------------------------------------------------------------------------
# scaling


def _dyadic_exponent(lam: float) -> int:
    m = round(math.log2(lam)) if lam > 0 else None
    if m is None or 2.0 ** m != lam:
        raise ConfigError(f"rescale factor must be a power of two, got {lam}")
    return m


def rescale_field(theta: SpectralField, lam: float, gamma: float, beta: float) -> SpectralField:
    """theta_hat_lam(xi) = lam^{2 gamma - beta - n} theta_hat(xi / lam) on the lattice.

    For lam = 2^m > 1 only multiples of lam receive values; for lam < 1 every
    point whose preimage lies on the lattice does.  Nyquist rows are dropped so
    the result stays Hermitian.  The time tag is left to the caller.
    """
    m = _dyadic_exponent(lam)
    grid = theta.grid
    n, N = grid.n, grid.N
    amp = lam ** (2 * gamma - beta - n)
    valid = np.ones(grid.shape, dtype=bool)
    src = []
    for k in grid.indices:
        if m >= 0:
            s, ok = k >> m, (k & ((1 << m) - 1)) == 0
        else:
            s, ok = k << (-m), np.ones(k.shape, dtype=bool)
        ok &= (s > -N // 2) & (s < N // 2)
        valid &= ok
        src.append(np.where(ok, np.mod(s, N), 0))
    valid &= ~grid.nyquist_mask
    out = np.where(valid, amp * theta.coeffs[tuple(src)], 0.0)
    return theta.with_coeffs(out)


# ---------------------------------------------------------------------------
# self-similarity


def _shell_deviation(a: np.ndarray, b: np.ndarray, r: np.ndarray, dxi: float, band) -> tuple[float, list]:
    """Max over unit-width radial shells in ``band`` of the relative L2 deviation of a from b."""
    lo, hi = band
    shells = np.floor(r / dxi + 0.5).astype(int)
    rows = []
    for s in range(int(math.ceil(lo / dxi)), int(math.floor(hi / dxi)) + 1):
        sel = shells == s
        den = math.sqrt(float(np.sum(np.abs(b[sel]) ** 2)))
        if den == 0:
            continue
        rows.append((s * dxi, math.sqrt(float(np.sum(np.abs(a[sel] - b[sel]) ** 2))) / den))
    return (max(d for _, d in rows) if rows else math.nan), rows


def selfsimilarity_experiment(P: CouplingSymbol, theta0: SpectralField, gamma: float, pairs, band,
                              dt: float = 1e-3, scheme: str = "etd_rk2", dealias: bool = True,
                              require_homogeneous: bool = True) -> ExperimentReport:
    """Compare theta_hat(xi, t2) with lam^{beta + n - 2 gamma} theta_hat(lam xi, t1), t2 = lam^{2 gamma} t1.

    ``pairs`` is a list of (t1, m) with lam = 2^m; ``band`` = (r_lo, r_hi) is the
    comparison band at time t2 (lam * r_hi must stay inside the data band).
    A linear run with the same data gives the truncation baseline.
    """
    hom = check_homogeneity(P)
    if require_homogeneous and not hom["homogeneous"]:
        raise ConfigError(f"self-similarity needs a homogeneous symbol; {P.name} deviates by {hom['max_deviation']:.3g}")
    grid = theta0.grid
    n, beta = grid.n, P.beta
    schedule = []
    for t1, m in pairs:
        lam = 2.0 ** int(m)
        schedule.append((float(t1), int(m), float(t1) * lam ** (2 * gamma)))
    times = sorted({t for t1, _, t2 in schedule for t in (t1, t2)})
    T = max(times)
    ts = TimeStepConfig(T=T, dt=min(dt, T), scheme=scheme, dealias=dealias)
    zero = builtin_symbol("zero", n=n)
    runs = {
        "nonlinear": etd_integrate(theta0, P, gamma, ts, output_times=times),
        "linear": etd_integrate(theta0, zero, gamma, ts, output_times=times),
    }
    r = grid.abs_xi
    in_band = (r >= band[0]) & (r <= band[1])
    metrics = {"pairs": []}
    for t1, m, t2 in schedule:
        lam = 2.0 ** m
        row = {"t1": t1, "t2": t2, "lambda": lam}
        for kind, run in runs.items():
            later = run.states[t2].coeffs
            # pull back: value at lam * xi of the earlier state
            earlier = rescale_field(run.states[t1], 2.0 ** (-m), gamma, beta).coeffs
            a = np.where(in_band, later, 0)
            b = np.where(in_band, earlier, 0)
            dev, shells = _shell_deviation(a, b, r, grid.dxi, band)
            row[f"{kind}_deviation"] = dev
            row[f"{kind}_shells"] = shells
        nl, li = runs["nonlinear"].states[t2].coeffs, runs["linear"].states[t2].coeffs
        # self-similarity of the nonlinear correction alone (lattice sums limit this one)
        corr_late = np.where(in_band, nl - li, 0)
        corr_early = rescale_field(runs["nonlinear"].states[t1] - runs["linear"].states[t1], 2.0 ** (-m), gamma, beta).coeffs
        row["correction_deviation"] = _shell_deviation(corr_late, np.where(in_band, corr_early, 0), r, grid.dxi, band)[0]
        row["nonlinear_departure"] = float(
            np.linalg.norm((nl - li)[in_band]) / max(np.linalg.norm(li[in_band]), 1e-300)
        )
        metrics["pairs"].append(row)
    worst = max(p["nonlinear_deviation"] for p in metrics["pairs"])
    base = max(p["linear_deviation"] for p in metrics["pairs"])
    metrics.update(max_deviation=worst, linear_baseline=base, homogeneity=hom)
    return ExperimentReport(
        "selfsim",
        {"symbol": P.name, "symbol_params": P.params, "beta": beta, "gamma": gamma, "n": n, "N": grid.N,
         "L": grid.L, "pairs": [[t1, m] for t1, m, _ in schedule], "band": list(band), "dt": dt, "scheme": scheme},
        metrics,
        {"deviation_le_5pct": worst <= 0.05, "linear_baseline_le_1e-3": base <= 1e-3},
    )


# ---------------------------------------------------------------------------
# asymptotic stability


def proxy_decay_time(diff0: SpectralField, gamma: float, norm, fraction: float = 0.1, t_start: float = 1 / 64,
                     t_max: float = 1e6, refine: bool = False) -> float:
    """First time t_start * 2^j with ||G(t)(theta0 - phi0)|| <= fraction * ||theta0 - phi0||.

    With ``refine`` the crossing is located by bisection instead.
    """
    semi = Semigroup(diff0.grid, gamma)
    p0 = norm(diff0)
    if p0 == 0:
        return 0.0
    f = lambda t: norm(diff0.with_coeffs(diff0.coeffs * semi.factor(t))) - fraction * p0  # noqa: E731
    lo, hi = 0.0, t_start
    while f(hi) > 0:
        lo, hi = hi, 2 * hi
        if hi > t_max:
            raise ConfigError("perturbation does not decay under the semigroup (zero-mode content?)")
    if refine:
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if f(mid) > 0 else (lo, mid)
    return hi


def stability_experiment(theta0: SpectralField, phi0: SpectralField, P: CouplingSymbol, gamma: float, norm,
                         T: float, nodes: int = 24, dt: float = 1e-3, scheme: str = "etd_rk2",
                         fraction: float = 0.1, ratio_bound: float = 10.0, dealias: bool = True,
                         epsilon: float | None = None) -> ExperimentReport:
    """Track D(t) = ||theta(t) - phi(t)|| against the linear proxy ||G(t)(theta0 - phi0)||."""
    if epsilon is not None:
        for name, f in (("theta0", theta0), ("phi0", phi0)):
            if norm(f) > epsilon:
                raise ConfigError(f"{name} fails the smallness gate: norm {norm(f):.4g} > epsilon {epsilon:.4g}")
    times = sorted(set(np.geomspace(T / 2 ** (nodes - 1), T, nodes).tolist()) | {0.0})
    ts = TimeStepConfig(T=T, dt=min(dt, T), scheme=scheme, dealias=dealias)
    run_a = etd_integrate(theta0, P, gamma, ts, output_times=times)
    run_b = etd_integrate(phi0, P, gamma, ts, output_times=times)
    semi = Semigroup(theta0.grid, gamma)
    d0 = theta0 - phi0
    D, proxy = [], []
    for t in times:
        D.append(norm(run_a.states[t] - run_b.states[t]))
        proxy.append(norm(d0.with_coeffs(d0.coeffs * semi.factor(t))))
    ratios = [d / p for d, p in zip(D, proxy) if p > 0]
    metrics = {
        "series": {"t": times, "diff_norm": D, "proxy_norm": proxy,
                   "fn_norm": [norm(run_a.states[t]) for t in times]},
        "D0": D[0], "DT": D[-1], "proxy0": proxy[0], "proxyT": proxy[-1],
        "max_ratio": max(ratios) if ratios else 0.0,
    }
    if D[0] == 0:
        verdicts = {"identical_data": all(d == 0 for d in D)}
    else:
        verdicts = {
            "diff_decays": D[-1] <= fraction * D[0],
            "proxy_decays": proxy[-1] <= fraction * proxy[0],
            "ratio_bounded": metrics["max_ratio"] <= ratio_bound,
        }
    return ExperimentReport(
        "stability",
        {"symbol": P.name, "symbol_params": P.params, "beta": P.beta, "gamma": gamma, "T": T, "nodes": nodes,
         "dt": dt, "scheme": scheme, "fraction": fraction, "ratio_bound": ratio_bound},
        metrics, verdicts,
    )


def run_record_from_report(rep: ExperimentReport) -> RunRecord:
    return RunRecord(params=rep.params, diagnostics=rep.metrics)
