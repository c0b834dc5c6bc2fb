"""Periodic grid, normalized FFTs, fractional dissipation and the FBM1 snapshot format.

Coefficients are stored in numpy FFT order and normalized so that the zero
mode is the spatial mean (forward divides by ``N**n``).  The frequency lattice
is ``(2*pi/L) * {-N/2, ..., N/2 - 1}**n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DimensionError, DomainError, NumericalBlowupError

BLOWUP_THRESHOLD = 1e12
SNAPSHOT_MAGIC = b"FBM1"


@dataclass(frozen=True)
class Grid:
    n: int
    N: int
    L: float = 2 * math.pi

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise DimensionError(f"grid.n must be 1, 2 or 3, got {self.n}")
        if self.N < 2 or self.N & (self.N - 1):
            raise DimensionError(f"grid.N must be a power of two, got {self.N}")
        if not self.L > 0:
            raise DomainError(f"grid.L must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def spacing(self) -> float:
        return self.L / self.N

    @property
    def dxi(self) -> float:
        """Frequency lattice spacing 2*pi/L."""
        return 2 * math.pi / self.L

    @property
    def nyquist(self) -> float:
        return math.pi * self.N / self.L

    @cached_property
    def index_1d(self) -> np.ndarray:
        # integer wavenumbers in FFT order; the Nyquist index is -N/2
        return np.fft.fftfreq(self.N, d=1.0 / self.N).astype(np.int64)

    @cached_property
    def indices(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.index_1d] * self.n), indexing="ij"))

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        return tuple(self.dxi * k.astype(float) for k in self.indices)

    @cached_property
    def abs_xi(self) -> np.ndarray:
        return np.sqrt(sum(x * x for x in self.xi))

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on lattice points with any component at the unpaired -N/2 index."""
        mask = np.zeros(self.shape, dtype=bool)
        for k in self.indices:
            mask |= k == -self.N // 2
        return mask

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on modes kept by the 2/3 rule."""
        keep = np.ones(self.shape, dtype=bool)
        cutoff = self.N / 3.0
        for k in self.indices:
            keep &= np.abs(k) <= cutoff
        return keep

    def coordinates(self) -> tuple[np.ndarray, ...]:
        x = np.arange(self.N) * self.spacing
        return tuple(np.meshgrid(*([x] * self.n), indexing="ij"))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a scalar field on ``grid`` at ``time_tag``."""

    grid: Grid
    coeffs: np.ndarray
    time_tag: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise DimensionError(
                f"coefficient array has shape {c.shape}, grid expects {self.grid.shape}"
            )
        if self.time_tag < 0:
            raise DomainError(f"time_tag must be nonnegative, got {self.time_tag}")
        object.__setattr__(self, "coeffs", c)

    # arithmetic stays on the same grid and keeps the left operand's time tag
    def _check(self, other: "SpectralField") -> None:
        if other.grid != self.grid:
            raise DimensionError("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return replace(self, coeffs=self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return replace(self, coeffs=self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return replace(self, coeffs=self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return replace(self, coeffs=-self.coeffs)

    def with_coeffs(self, coeffs, time_tag=None) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.time_tag if time_tag is None else time_tag)

    @property
    def zero_mode(self) -> complex:
        return complex(self.coeffs[(0,) * self.grid.n])

    def hermitian_defect(self) -> float:
        """max |c(xi) - conj(c(-xi))| over lattice points whose mirror is on the lattice."""
        c = self.coeffs
        mirror = c
        for ax in range(c.ndim):
            mirror = np.roll(np.flip(mirror, axis=ax), 1, axis=ax)
        return float(np.max(np.abs(c - np.conj(mirror)))) if c.size else 0.0

    def l2_norm(self) -> float:
        """Physical-space L2 norm on the torus (Parseval with normalized coefficients)."""
        return math.sqrt(self.grid.L ** self.grid.n * float(np.sum(np.abs(self.coeffs) ** 2)))

    def check_finite(self, threshold: float = BLOWUP_THRESHOLD) -> "SpectralField":
        a = np.abs(self.coeffs)
        if not np.all(np.isfinite(a)) or (a.size and a.max() > threshold):
            raise NumericalBlowupError(
                f"non-finite or >{threshold:g} coefficient at t={self.time_tag}", time=self.time_tag
            )
        return self


def zeros(grid: Grid, time_tag: float = 0.0) -> SpectralField:
    return SpectralField(grid, np.zeros(grid.shape, dtype=complex), time_tag)


def forward_transform(samples, grid: Grid, time_tag: float = 0.0) -> SpectralField:
    samples = np.asarray(samples, dtype=float)
    if samples.shape != grid.shape:
        raise DimensionError(f"samples have shape {samples.shape}, grid expects {grid.shape}")
    return SpectralField(grid, np.fft.fftn(samples) / grid.N ** grid.n, time_tag)


def inverse_transform_with_residue(f: SpectralField) -> tuple[np.ndarray, float]:
    z = np.fft.ifftn(f.coeffs) * f.grid.N ** f.grid.n
    return z.real.copy(), float(np.max(np.abs(z.imag))) if z.size else 0.0


def inverse_transform(f: SpectralField) -> np.ndarray:
    """Real samples of ``f``; use :func:`inverse_transform_with_residue` for the imaginary part."""
    return inverse_transform_with_residue(f)[0]


def fractional_symbol(grid: Grid, gamma: float) -> np.ndarray:
    """|xi|**(2*gamma) on the lattice, 0 at xi = 0."""
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    return grid.abs_xi ** (2 * gamma)


@dataclass
class Semigroup:
    """Decay tables exp(-t |xi|^{2 gamma}) for one grid, cached by t."""

    grid: Grid
    gamma: float
    _tables: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.gamma > 0.5:
            raise DomainError(f"gamma must exceed 1/2, got {self.gamma}")
        self.symbol = fractional_symbol(self.grid, self.gamma)

    def factor(self, t: float) -> np.ndarray:
        if t < 0:
            raise DomainError(f"semigroup time must be nonnegative, got {t}")
        table = self._tables.get(t)
        if table is None:
            table = np.exp(-t * self.symbol)
            if len(self._tables) < 256:
                self._tables[t] = table
        return table

    def apply(self, f: SpectralField, t: float) -> SpectralField:
        return SpectralField(f.grid, f.coeffs * self.factor(t), f.time_tag + t)


def apply_semigroup(f: SpectralField, gamma: float, t: float) -> SpectralField:
    if t < 0:
        raise DomainError(f"semigroup time must be nonnegative, got {t}")
    if not gamma > 0.5:
        raise DomainError(f"gamma must exceed 1/2, got {gamma}")
    return SpectralField(
        f.grid, f.coeffs * np.exp(-t * fractional_symbol(f.grid, gamma)), f.time_tag + t
    )


def centered(a: np.ndarray) -> np.ndarray:
    """FFT-ordered lattice array -> array with the zero frequency at index N/2."""
    return np.fft.fftshift(a)


# ---------------------------------------------------------------------------
# FBM1 snapshots


def write_snapshot(path, f: SpectralField, gamma: float = float("nan"), beta: float = float("nan")) -> Path:
    g = f.grid
    header = f"{g.n} {g.N} {g.L!r} {float(gamma)!r} {float(beta)!r} {float(f.time_tag)!r}\n"
    data = np.empty(f.coeffs.size * 2, dtype="<f8")
    flat = np.ascontiguousarray(f.coeffs).reshape(-1)
    data[0::2] = flat.real
    data[1::2] = flat.imag
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(header.encode("ascii"))
        fh.write(data.tobytes())
    return path


def read_snapshot(path) -> tuple[SpectralField, dict]:
    """Return the field and the header values (n, N, L, gamma, beta, time_tag)."""
    raw = Path(path).read_bytes()
    if raw[:4] != SNAPSHOT_MAGIC:
        raise DimensionError(f"{path}: missing FBM1 magic bytes")
    end = raw.index(b"\n", 4)
    parts = raw[4:end].decode("ascii").split()
    if len(parts) != 6:
        raise DimensionError(f"{path}: header needs 6 fields, got {len(parts)}")
    n, N = int(parts[0]), int(parts[1])
    L, gamma, beta, t = (float(v) for v in parts[2:])
    grid = Grid(n, N, L)
    data = np.frombuffer(raw[end + 1:], dtype="<f8")
    if data.size != 2 * N ** n:
        raise DimensionError(f"{path}: expected {N ** n} complex values, found {data.size / 2}")
    coeffs = (data[0::2] + 1j * data[1::2]).reshape(grid.shape)
    header = {"n": n, "N": N, "L": L, "gamma": gamma, "beta": beta, "time_tag": t}
    return SpectralField(grid, coeffs, t), header
