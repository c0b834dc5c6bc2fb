"""Coupling multipliers P(xi) with u_hat(xi) = P(xi) theta_hat(xi).

Every builtin maps a frequency to an n-vector of complex values and vanishes at
xi = 0.  On a lattice the unpaired Nyquist row is zeroed as well, which keeps
the velocity of a real scalar real.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CatalogError, ConfigError, DimensionError
from .spectral_core import Grid, SpectralField

Evaluator = Callable[[tuple], np.ndarray]

REFERENCE_N = {1: 256, 2: 64, 3: 16}


def classify_criticality(beta: float, gamma: float) -> str:
    if beta < 2 * gamma:
        return "sub-critical"
    if beta == 2 * gamma:
        return "critical"
    return "super-critical"


@dataclass(frozen=True, eq=False)
class CouplingSymbol:
    name: str
    n: int
    beta: float
    homogeneous: bool
    evaluate: Evaluator = field(repr=False)
    growth_constant: float = math.inf
    divergence_free: bool = False
    params: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def raw(self, xi: tuple) -> np.ndarray:
        """Evaluate at arbitrary frequencies; shape (n, *xi[0].shape), 0 at xi = 0."""
        xi = tuple(np.asarray(x, dtype=float) for x in xi)
        if len(xi) != self.n:
            raise DimensionError(f"symbol {self.name} is {self.n}-dimensional, got {len(xi)} components")
        r2 = sum(x * x for x in xi)
        zero = r2 == 0
        safe = tuple(np.where(zero, 1.0, x) if i == 0 else x for i, x in enumerate(xi))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(self.evaluate(safe), dtype=complex).reshape((self.n,) + r2.shape)
        out = np.where(zero, 0.0, out)
        return np.nan_to_num(out, nan=0.0, posinf=0.0, neginf=0.0)

    def on_grid(self, grid: Grid) -> np.ndarray:
        table = self._cache.get(grid)
        if table is None:
            if grid.n != self.n:
                raise DimensionError(
                    f"symbol {self.name} needs n={self.n}, grid has n={grid.n}"
                )
            table = self.raw(grid.xi)
            table[:, grid.nyquist_mask] = 0.0
            table.setflags(write=False)
            self._cache[grid] = table
        return table

    def growth_ratio(self, grid: Grid) -> float:
        """max over nonzero lattice xi of |P(xi)| / |xi|**(beta - 1)."""
        vals = np.sqrt(np.sum(np.abs(self.raw(grid.xi)) ** 2, axis=0))
        r = grid.abs_xi
        nz = r > 0
        return float(np.max(vals[nz] / r[nz] ** (self.beta - 1)))


def _perp(xi, radial):
    """(-i xi_2, i xi_1) * radial(|xi|): the symbol of grad-perp composed with a radial multiplier."""
    r = np.sqrt(xi[0] ** 2 + xi[1] ** 2)
    f = radial(r)
    return np.stack([-1j * xi[1] * f, 1j * xi[0] * f])


def _hilbert_like(xi, radial):
    r = np.abs(xi[0])
    return (-1j * np.sign(xi[0]) * radial(r))[None]


def _log_factor(r, chi):
    return np.log1p(r * r) ** chi


def _loglog_factor(r, chi):
    return np.log1p(np.log1p(r * r)) ** chi


def mg3d_symbol(xi):
    """Anisotropic rational stand-in for the magneto-geostrophic coupling.

    Degree-zero homogeneous, real and even, divergence free, and unbounded near
    the xi_1 axis where it grows like |xi|; that growth puts it in the beta = 2
    class.  The set xi_2 = xi_3 = 0 where the denominator vanishes maps to 0.
    """
    k1, k2, k3 = xi
    r2 = k1 * k1 + k2 * k2 + k3 * k3
    den = r2 * k3 * k3 + k2 ** 4
    sing = den == 0
    den = np.where(sing, 1.0, den)
    m1 = (k2 * k3 * r2 - k1 * k2 * k2 * k3) / den
    m2 = (-k1 * k3 * r2 - k2 ** 3 * k3) / den
    m3 = (k2 * k2 * (k1 * k1 + k2 * k2)) / den
    out = np.stack([m1, m2, m3]).astype(complex)
    out[:, sing] = 0.0
    return out


M_FUNCTIONS = {
    "loglog": lambda r: 1.0 + np.log1p(np.log1p(r * r)),
    "log": lambda r: 1.0 + np.log1p(r * r),
    "one": lambda r: np.ones_like(r),
}


def _require_n(name, n, allowed):
    if n not in allowed:
        raise DimensionError(f"symbol.name={name} requires n in {sorted(allowed)}, got n={n}")


def from_multipliers(
    multipliers: list[Callable], a: np.ndarray, beta: float, *, name: str = "custom", homogeneous: bool = False,
    grid: Grid | None = None,
) -> CouplingSymbol:
    """Build P_k(xi) = sum_j a[j, k] * (i xi_j / |xi|^2) * P_j(xi) from scalar multipliers P_j."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or len(multipliers) != n:
        raise DimensionError("need an n x n coefficient matrix and n scalar multipliers")

    def evaluate(xi):
        r2 = sum(x * x for x in xi)
        pj = [np.asarray(m(xi), dtype=complex) for m in multipliers]
        return np.stack(
            [sum(a[j, k] * 1j * xi[j] / r2 * pj[j] for j in range(n)) for k in range(n)]
        )

    return _finish(name, n, beta, homogeneous, evaluate, False, {"a": a.tolist()}, grid)


def custom_table(values: np.ndarray, grid: Grid, beta: float, *, name: str = "custom", homogeneous: bool = False):
    """A symbol given by per-frequency values (shape (n, *grid.shape), FFT order) on one grid."""
    values = np.asarray(values, dtype=complex)
    if values.shape != (grid.n,) + grid.shape:
        raise DimensionError(f"custom symbol table has shape {values.shape}, need {(grid.n,) + grid.shape}")

    def evaluate(xi):
        idx = []
        for x in xi:
            k = np.rint(np.asarray(x) / grid.dxi).astype(np.int64)
            if np.any(np.abs(k * grid.dxi - x) > 1e-9 * max(1.0, grid.dxi)) or np.any(np.abs(k) > grid.N // 2):
                raise DimensionError("custom symbol evaluated off its lattice")
            idx.append(np.mod(k, grid.N))
        return values[(slice(None),) + tuple(idx)]

    return _finish(name, grid.n, beta, homogeneous, evaluate, False, {}, grid)


def _finish(name, n, beta, homogeneous, evaluate, div_free, params, grid):
    if not 0 <= beta < n + 1:
        raise ConfigError(f"symbol.beta={beta} outside [0, n+1) with n={n}")
    sym = CouplingSymbol(name, n, float(beta), homogeneous, evaluate, math.inf, div_free, params)
    ref = grid if grid is not None else Grid(n, REFERENCE_N[n])
    c = sym.growth_ratio(ref) * (1 + 1e-12) if name != "zero" else 0.0
    return CouplingSymbol(name, n, float(beta), homogeneous, evaluate, c, div_free, params)


def builtin_symbol(name: str, params: dict | None = None, *, n: int | None = None, grid: Grid | None = None) -> CouplingSymbol:
    """Catalog lookup.  ``params`` may carry alpha, beta, chi, m and n.

    The growth constant is measured on ``grid`` (or a reference lattice) at
    construction.
    """
    params = dict(params or {})
    if n is None:
        n = params.pop("n", None)
    if n is None and grid is not None:
        n = grid.n
    if grid is not None and n != grid.n:
        raise DimensionError(f"symbol n={n} does not match grid n={grid.n}")
    alpha = float(params.get("alpha", 0.0))
    chi = float(params.get("chi", 1.0))

    if name == "zero":
        if n is None:
            raise ConfigError("symbol.name=zero needs a dimension n")
        nn = n
        return _finish("zero", nn, 0.0, True, lambda xi: np.zeros((nn,) + np.shape(xi[0]), complex), True, {}, grid)
    if name == "burgers":
        n = 1 if n is None else n
        _require_n(name, n, {1})
        return _finish(name, 1, 1.0, True, lambda xi: np.ones_like(xi[0])[None].astype(complex), False, {}, grid)
    if name == "hilbert":
        n = 1 if n is None else n
        _require_n(name, n, {1})
        return _finish(name, 1, 1.0, True, lambda xi: _hilbert_like(xi, np.ones_like), False, {}, grid)
    if name == "hilbert_alpha":
        n = 1 if n is None else n
        _require_n(name, n, {1})
        return _finish(name, 1, alpha + 1, True, lambda xi: _hilbert_like(xi, lambda r: r ** alpha), False,
                       {"alpha": alpha}, grid)
    if name == "vorticity2d":
        n = 2 if n is None else n
        _require_n(name, n, {2})
        return _finish(name, 2, 0.0, True, lambda xi: _perp(xi, lambda r: r ** -2.0), True, {}, grid)
    if name == "gsqg":
        n = 2 if n is None else n
        _require_n(name, n, {2})
        if "beta" not in params:
            raise ConfigError("symbol.name=gsqg needs symbol.beta")
        beta = float(params["beta"])
        return _finish(name, 2, beta, True, lambda xi: _perp(xi, lambda r: r ** (beta - 2)), True,
                       {"beta": beta}, grid)
    if name in ("log_coupling", "loglog_coupling"):
        n = 2 if n is None else n
        _require_n(name, n, {1, 2})
        if chi <= 0:
            raise ConfigError(f"symbol.chi must be positive, got {chi}")
        factor = _log_factor if name == "log_coupling" else _loglog_factor
        if n == 2:
            ev = lambda xi: _perp(xi, lambda r: r ** (alpha - 2) * factor(r, chi))  # noqa: E731
        else:
            ev = lambda xi: _hilbert_like(xi, lambda r: r ** (alpha - 1) * factor(r, chi))  # noqa: E731
        return _finish(name, n, alpha, False, ev, n == 2, {"alpha": alpha, "chi": chi}, grid)
    if name == "mg3d":
        n = 3 if n is None else n
        _require_n(name, n, {3})
        return _finish(name, 3, 2.0, False, mg3d_symbol, True, {}, grid)
    if name == "m_coupling":
        n = 2 if n is None else n
        _require_n(name, n, {2})
        m = params.get("m", "loglog")
        mfun = M_FUNCTIONS.get(m) if isinstance(m, str) else m
        if mfun is None:
            raise CatalogError(f"symbol.m={m!r} unknown; choose from {sorted(M_FUNCTIONS)}")
        return _finish(name, 2, 1.0, False, lambda xi: _perp(xi, lambda r: mfun(r) / r), True,
                       {"m": m if isinstance(m, str) else "callable"}, grid)
    if name == "custom":
        if "values" in params:
            if grid is None:
                raise ConfigError("symbol.name=custom with a value table needs a grid")
            if "beta" not in params:
                raise ConfigError("symbol.name=custom needs symbol.beta")
            return custom_table(params["values"], grid, float(params["beta"]),
                                homogeneous=bool(params.get("homogeneous", False)))
        raise ConfigError("symbol.name=custom needs symbol.paths (snapshot files) or a value table")
    raise CatalogError(f"unknown symbol.name={name!r}; choose from {sorted(CATALOG)}")


CATALOG = (
    "zero", "burgers", "hilbert", "hilbert_alpha", "vorticity2d", "gsqg", "log_coupling",
    "loglog_coupling", "mg3d", "m_coupling", "custom",
)


def velocity_from_scalar(theta: SpectralField, P: CouplingSymbol) -> list[SpectralField]:
    table = P.on_grid(theta.grid)
    return [theta.with_coeffs(table[k] * theta.coeffs) for k in range(P.n)]


def check_homogeneity(P: CouplingSymbol, grid: Grid | None = None) -> dict:
    """Compare |P_c(2 xi)| with 2**(beta-1) |P_c(xi)| on lattice pairs (xi, 2 xi)."""
    grid = grid if grid is not None else Grid(P.n, REFERENCE_N[P.n])
    half = grid.N // 4
    k1 = np.arange(-half + 1, half)
    ks = np.meshgrid(*([k1] * grid.n), indexing="ij")
    xi = tuple(grid.dxi * k.astype(float).ravel() for k in ks)
    v1 = np.abs(P.raw(xi))
    v2 = np.abs(P.raw(tuple(2 * x for x in xi)))
    expect = 2.0 ** (P.beta - 1) * v1
    scale = np.max(v1) if v1.size else 0.0
    ok = expect > 1e-12 * max(scale, 1e-300)
    dev = np.abs(v2[ok] - expect[ok]) / expect[ok]
    # components that vanish at xi must vanish at 2 xi as well
    zero_mismatch = np.abs(v2[~ok]) > 1e-12 * max(scale, 1e-300)
    max_dev = float(dev.max()) if dev.size else 0.0
    if np.any(zero_mismatch):
        max_dev = max(max_dev, math.inf)
    return {
        "symbol": P.name,
        "declared_homogeneous": P.homogeneous,
        "pairs": int(ok.sum()),
        "max_deviation": max_dev,
        "homogeneous": max_dev <= 1e-12,
    }


def divergence_defect(P: CouplingSymbol, grid: Grid) -> float:
    """max over the lattice of |sum_k xi_k P_k(xi)|."""
    table = P.raw(grid.xi)
    return float(np.max(np.abs(sum(grid.xi[k] * table[k] for k in range(P.n)))))
