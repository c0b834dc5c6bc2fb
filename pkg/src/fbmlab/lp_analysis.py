"""Littlewood-Paley blocks, frequency-side Morrey norms and Fourier-Besov-Morrey norms.

All norms act on coefficient arrays viewed as samples of a function on the
frequency lattice; L^p norms are Riemann sums with cell volume ``dxi**n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .errors import ConfigError, DomainError, PreconditionError, RangeError
from .spectral_core import Grid, SpectralField, centered, forward_transform, inverse_transform

INNER = 3.0 / 4.0
OUTER = 4.0 / 3.0


def smoothstep(t):
    """Quintic 6t^5 - 15t^4 + 10t^3 clipped to [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def chi(r):
    """Radial cutoff: 1 on [0, 3/4], 0 on [4/3, inf)."""
    return 1.0 - smoothstep((np.asarray(r, dtype=float) - INNER) / (OUTER - INNER))


def band_limits(grid: Grid) -> tuple[int, int]:
    k_min = math.ceil(math.log2(grid.dxi)) - 1
    k_max = math.floor(math.log2(math.pi * grid.N / grid.L)) - 1
    return k_min, k_max


class DyadicPartition:
    """phi_k(xi) = chi(2^-k |xi| / 2) - chi(2^-k |xi|) for k_min <= k <= k_max on one grid."""

    def __init__(self, grid: Grid, k_min: int | None = None, k_max: int | None = None):
        lo, hi = band_limits(grid)
        self.grid = grid
        self.k_min = lo if k_min is None else int(k_min)
        self.k_max = hi if k_max is None else int(k_max)
        if self.k_min > self.k_max:
            raise RangeError(f"empty dyadic band [{self.k_min}, {self.k_max}]")
        self._phi: dict[int, np.ndarray] = {}
        self._chi: dict[int, np.ndarray] = {}

    @property
    def ks(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def _chi_at(self, k: int) -> np.ndarray:
        # chi(2^-k |xi|); phi_k uses levels k and k+1 so sums telescope bit-exactly
        c = self._chi.get(k)
        if c is None:
            c = chi(self.grid.abs_xi * 2.0 ** (-k))
            self._chi[k] = c
        return c

    def phi(self, k: int) -> np.ndarray:
        self._check(k)
        p = self._phi.get(k)
        if p is None:
            p = self._chi_at(k + 1) - self._chi_at(k)
            self._phi[k] = p
        return p

    def _check(self, k: int) -> None:
        if not self.k_min <= k <= self.k_max:
            raise RangeError(f"block k={k} outside resolved band [{self.k_min}, {self.k_max}]")

    def partition_sum(self) -> np.ndarray:
        return sum(self.phi(k) for k in self.ks)

    def low_pass_symbol(self, j: int) -> np.ndarray:
        """Symbol of S_j = sum_{k_min <= k <= j-1} Delta_k."""
        if j - 1 < self.k_min:
            return np.zeros(self.grid.shape)
        if j - 1 > self.k_max:
            raise RangeError(f"low_pass j={j} exceeds k_max+1={self.k_max + 1}")
        return sum(self.phi(k) for k in range(self.k_min, j))

    @cached_property
    def resolved_mask(self) -> np.ndarray:
        """Lattice points where the partition of unity holds: 4/3 2^k_min <= |xi| <= 3/4 2^k_max."""
        r = self.grid.abs_xi
        return (r >= OUTER * 2.0 ** self.k_min) & (r <= INNER * 2.0 ** self.k_max)


def dyadic_block(f: SpectralField, part: DyadicPartition, k: int) -> SpectralField:
    return f.with_coeffs(part.phi(k) * f.coeffs)


def low_pass(f: SpectralField, part: DyadicPartition, j: int) -> SpectralField:
    return f.with_coeffs(part.low_pass_symbol(j) * f.coeffs)


# ---------------------------------------------------------------------------
# Morrey norms


def _radius_thresholds(shape, radii_per_octave: int) -> np.ndarray:
    diag = math.sqrt(sum(s * s for s in shape))
    m_top = math.ceil(radii_per_octave * math.log2(diag + 1.0))
    radii = 2.0 ** (np.arange(m_top + 1) / radii_per_octave)
    return radii


def morrey_norm(
    g,
    p: float,
    mu: float,
    *,
    dxi: float = 1.0,
    stride: int = 4,
    origin=None,
    radii_per_octave: int = 1,
    return_argmax: bool = False,
):
    """Discrete frequency-side Morrey norm of a lattice array.

    Maximizes ``R**(-mu/p) * (sum_{|xi - c| < R} |g|^p dxi^n)**(1/p)`` over centers
    ``c`` on the sublattice ``origin + stride * Z^n`` (clipped to the array) and
    radii ``R = dxi * 2**(m / radii_per_octave)`` up to the array diagonal.
    """
    g = np.asarray(g)
    n = g.ndim
    if not p >= 1:
        raise DomainError(f"Morrey exponent p must be >= 1, got {p}")
    if not 0 <= mu < n:
        raise DomainError(f"Morrey parameter mu must lie in [0, {n}), got {mu}")
    if stride < 1 or radii_per_octave < 1:
        raise ConfigError("stride and radii_per_octave must be positive integers")
    a = np.abs(g)
    if not np.all(np.isfinite(a)):
        raise DomainError("Morrey norm of a non-finite array")
    if math.isinf(p):
        val = float(a.max()) if a.size else 0.0
        return (val, None) if return_argmax else val
    nz = np.nonzero(a)
    if len(nz[0]) == 0:
        return (0.0, None) if return_argmax else 0.0
    coords = np.ascontiguousarray(np.stack(nz, axis=1).astype(np.int64))
    weights = np.ascontiguousarray(a[nz].astype(np.float64) ** p)
    origin = (0,) * n if origin is None else tuple(origin)
    axes = [np.arange(o % stride, s, stride) for o, s in zip(origin, g.shape)]
    centers = np.ascontiguousarray(
        np.stack([c.ravel() for c in np.meshgrid(*axes, indexing="ij")], axis=1).astype(np.int64)
    )
    radii = _radius_thresholds(g.shape, radii_per_octave)
    sums = kernels.ball_sums(coords, weights, centers, np.ascontiguousarray(radii * radii))
    scale = (radii * dxi) ** (-mu / p)
    vals = scale[None, :] * (sums * dxi ** n) ** (1.0 / p)
    idx = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best = float(vals[idx])
    if return_argmax:
        return best, {"center": tuple(int(v) for v in centers[idx[0]]), "radius": float(radii[idx[1]] * dxi)}
    return best


def lp_norm(g, p: float, dxi: float = 1.0) -> float:
    a = np.abs(np.asarray(g))
    if math.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float((np.sum(a ** p) * dxi ** a.ndim) ** (1.0 / p))


def spectral_morrey(coeffs: np.ndarray, grid: Grid, p: float, mu: float, stride: int = 4, **kw) -> float:
    """Morrey norm of an FFT-ordered lattice array, centers aligned with xi = 0."""
    return morrey_norm(centered(coeffs), p, mu, dxi=grid.dxi, stride=stride,
                       origin=(grid.N // 2,) * grid.n, **kw)


# ---------------------------------------------------------------------------
# parameters


def theorem_violations(n: int, gamma: float, beta: float, p: float, mu: float) -> list[str]:
    """Failed well-posedness inequalities, each stated with its numbers; empty if admissible."""
    out = []
    if not gamma > 0.5:
        out.append(f"gamma > 1/2 fails: gamma={gamma}")
    if not beta >= 0:
        out.append(f"0 <= beta fails: beta={beta}")
    if not beta < 2 * gamma:
        out.append(f"beta < 2*gamma fails: beta={beta}, 2*gamma={2 * gamma}")
    if not 2 * gamma < (n + beta + 1) / 2:
        out.append(f"2*gamma < (n+beta+1)/2 fails: {2 * gamma} >= {(n + beta + 1) / 2}")
    if not 0 <= mu < n:
        out.append(f"0 <= mu < n fails: mu={mu}, n={n}")
    denom = n + beta + 1 - 4 * gamma
    if denom <= 0:
        out.append(f"(n-mu)/(n+beta+1-4*gamma) < p undefined: n+beta+1-4*gamma={denom} <= 0")
    elif not (n - mu) / denom < p:
        out.append(f"(n-mu)/(n+beta+1-4*gamma) < p fails: {(n - mu) / denom} >= p={p}")
    return out


def critical_s(n: int, gamma: float, beta: float, p: float, mu: float) -> float:
    return n - (n - mu) / p - (2 * gamma - beta)


@dataclass(frozen=True)
class NormParams:
    p: float
    mu: float
    q: float
    s: float

    def __post_init__(self):
        if not self.p >= 1:
            raise DomainError(f"norm.p must be >= 1, got {self.p}")
        if not self.q >= 1:
            raise DomainError(f"norm.q must be >= 1, got {self.q}")
        if not self.mu >= 0:
            raise DomainError(f"norm.mu must be >= 0, got {self.mu}")

    @classmethod
    def theorem(cls, n: int, gamma: float, beta: float, p: float, mu: float, q: float = math.inf,
                strict: bool = True) -> "NormParams":
        """Norm with the scaling-critical s; ``strict`` raises on any failed inequality."""
        bad = theorem_violations(n, gamma, beta, p, mu)
        if strict and bad:
            raise ConfigError("; ".join(bad))
        return cls(p, mu, q, critical_s(n, gamma, beta, p, mu))


def block_norms(f: SpectralField, part: DyadicPartition, np_: NormParams, stride: int = 4) -> list[dict]:
    if not np_.mu < f.grid.n:
        raise DomainError(f"norm.mu={np_.mu} must be < n={f.grid.n}")
    rows = []
    for k in part.ks:
        m = spectral_morrey(part.phi(k) * f.coeffs, f.grid, np_.p, np_.mu, stride)
        w = 2.0 ** (k * np_.s)
        rows.append({"k": k, "block_norm": m, "weight": w, "weighted": w * m})
    return rows


def _aggregate(weighted, q):
    weighted = np.asarray(weighted, dtype=float)
    if math.isinf(q):
        return float(weighted.max()) if weighted.size else 0.0
    return float(np.sum(weighted ** q) ** (1.0 / q))


def fbm_norm(f: SpectralField, part: DyadicPartition, np_: NormParams, stride: int = 4) -> float:
    return _aggregate([r["weighted"] for r in block_norms(f, part, np_, stride)], np_.q)


def fbm_report(f: SpectralField, part: DyadicPartition, np_: NormParams, stride: int = 4) -> tuple[list[dict], dict]:
    rows = block_norms(f, part, np_, stride)
    summary = {
        "norm": _aggregate([r["weighted"] for r in rows], np_.q),
        "p": np_.p, "mu": np_.mu, "q": np_.q, "s": np_.s,
        "k_min": part.k_min, "k_max": part.k_max,
        "stride": stride, "radii": "dyadic", "backend": kernels.BACKEND,
    }
    return rows, summary


class FNNorm:
    """Callable FN norm bound to one partition and parameter set."""

    def __init__(self, part: DyadicPartition, np_: NormParams, stride: int = 4):
        self.part, self.params, self.stride = part, np_, stride

    def __call__(self, f: SpectralField) -> float:
        return fbm_norm(f, self.part, self.params, self.stride)


# ---------------------------------------------------------------------------
# paraproducts and inequality checks


def paraproduct_decompose(f: SpectralField, g: SpectralField, part: DyadicPartition):
    """(T_f g, T_g f, R(f, g)) built from the resolved band."""
    if f.grid != g.grid:
        raise ConfigError("paraproduct operands live on different grids")
    ks = list(part.ks)
    df = {k: inverse_transform(dyadic_block(f, part, k)) for k in ks}
    dg = {k: inverse_transform(dyadic_block(g, part, k)) for k in ks}
    zero = np.zeros(f.grid.shape)

    def low(d, k):  # S_{k-1} = sum_{k' <= k-2}
        return sum((d[kk] for kk in ks if kk <= k - 2), zero)

    t_fg = sum((low(df, k) * dg[k] for k in ks), zero)
    t_gf = sum((low(dg, k) * df[k] for k in ks), zero)
    rem = sum((df[k] * sum((dg[kk] for kk in ks if abs(kk - k) <= 1), zero) for k in ks), zero)
    return tuple(forward_transform(x, f.grid, f.time_tag) for x in (t_fg, t_gf, rem))


def bernstein_check(f: SpectralField, alpha, p: float, q: float, mu1: float, mu2: float, j: int,
                    A: float = 8.0 / 3.0, stride: int = 4) -> dict:
    """Ratio of ||(i xi)^alpha f||_{M_{q,mu2}} to its Bernstein bound 2^{j|alpha| + j((n-mu2)/q - (n-mu1)/p)} ||f||_{M_{p,mu1}}."""
    grid = f.grid
    n = grid.n
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n:
        raise ConfigError(f"multiindex alpha has {len(alpha)} entries, need n={n}")
    if not q <= p:
        raise ConfigError(f"Bernstein check needs q <= p, got q={q}, p={p}")
    if not (n - mu2) / p <= (n - mu1) / q:
        raise ConfigError(f"Bernstein check needs (n-mu2)/p <= (n-mu1)/q, got {(n - mu2) / p} > {(n - mu1) / q}")
    support = np.abs(f.coeffs) > 0
    if np.any(grid.abs_xi[support] > A * 2.0 ** j * (1 + 1e-12)):
        raise PreconditionError(f"f_hat not supported in |xi| <= {A}*2^{j}")
    mult = np.ones(grid.shape, dtype=complex)
    for a, x in zip(alpha, grid.xi):
        mult = mult * (1j * x) ** a
    num = spectral_morrey(mult * f.coeffs, grid, q, mu2, stride)
    den_norm = spectral_morrey(f.coeffs, grid, p, mu1, stride)
    expo = j * sum(alpha) + j * ((n - mu2) / q - (n - mu1) / p)
    den = 2.0 ** expo * den_norm
    return {"j": j, "numerator": num, "denominator": den, "ratio": num / den if den > 0 else math.nan}


def linear_convolution(phi: np.ndarray, g: np.ndarray, dxi: float = 1.0) -> np.ndarray:
    """Full (non-periodic) lattice convolution sum_eta phi(eta) g(xi - eta) dxi^n."""
    shape = tuple(a + b - 1 for a, b in zip(phi.shape, g.shape))
    axes = tuple(range(len(shape)))
    out = np.fft.ifftn(np.fft.fftn(phi, shape, axes) * np.fft.fftn(g, shape, axes), axes=axes)
    return out * dxi ** g.ndim


def holder_young_check(f, g, phi, params: dict, dxi: float = 1.0) -> dict:
    """Discrete Hoelder and Young inequalities for Morrey norms with a full center search.

    ``params`` holds p1, mu1, p2, mu2, p3, mu3 (Hoelder) and p, mu (Young).
    """
    f, g, phi = (np.asarray(x) for x in (f, g, phi))
    n = g.ndim
    p1, mu1, p2, mu2 = (float(params[k]) for k in ("p1", "mu1", "p2", "mu2"))
    p3, mu3 = float(params["p3"]), float(params["mu3"])
    if not math.isclose(1 / p3, 1 / p1 + 1 / p2, rel_tol=1e-12, abs_tol=1e-15):
        raise ConfigError(f"Hoelder exponents need 1/p3 = 1/p1 + 1/p2, got p1={p1}, p2={p2}, p3={p3}")
    if not math.isclose(mu3 / p3, mu1 / p1 + mu2 / p2, rel_tol=1e-12, abs_tol=1e-15):
        raise ConfigError(f"Hoelder exponents need mu3/p3 = mu1/p1 + mu2/p2, got mu3={mu3}")
    kw = dict(dxi=dxi, stride=1)
    lhs_h = morrey_norm(f * g, p3, mu3, **kw)
    rhs_h = morrey_norm(f, p1, mu1, **kw) * morrey_norm(g, p2, mu2, **kw)

    p, mu = float(params["p"]), float(params["mu"])
    conv = linear_convolution(phi, g, dxi)
    pad = [(s - 1, s - 1) for s in phi.shape]
    g_pad = np.pad(g, pad)  # covers every shifted center of the convolution
    lhs_y = morrey_norm(conv, p, mu, **kw)
    rhs_y = lp_norm(phi, 1, dxi) * morrey_norm(g_pad, p, mu, **kw)
    tol = 1e-10
    return {
        "holder": {"lhs": lhs_h, "rhs": rhs_h, "ok": lhs_h <= rhs_h * (1 + tol) + 1e-300},
        "young": {"lhs": lhs_y, "rhs": rhs_y, "ok": lhs_y <= rhs_y * (1 + tol) + 1e-300},
        "n": n,
    }
