"""Periodic complex-torus grids: scalar fields, spectral derivatives, quadrature.

A grid discretizes a fundamental domain of C^n / lattice with one real axis per
real coordinate: axis 2i is Re z^i, axis 2i+1 is Im z^i. Fields are stored
row-major over these axes (C order), so binary dumps are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DomainError

MIN_AXIS_SIZE = 8


def _per_axis(value, n: int, name: str, default=None) -> tuple:
    """Normalize scalar / per-complex-dim / per-axis input to a 2n tuple."""
    if value is None:
        value = default
    if np.isscalar(value):
        return tuple([value] * (2 * n))
    seq = tuple(value)
    if len(seq) == n:
        return tuple(v for v in seq for _ in range(2))
    if len(seq) == 2 * n:
        return seq
    raise DomainError(f"{name} must be scalar, length {n} or length {2 * n}, got length {len(seq)}")


@dataclass(frozen=True)
class ComplexGrid:
    """Uniform periodic grid on a chart of an n-dimensional complex torus."""

    n: int
    sizes: tuple[int, ...]
    periods: tuple[float, ...]

    def __init__(self, n: int, sizes, periods=None):
        if n < 1:
            raise DomainError(f"complex dimension must be >= 1, got {n}")
        ax_sizes = tuple(int(s) for s in _per_axis(sizes, n, "sizes"))
        ax_periods = tuple(float(p) for p in _per_axis(periods, n, "periods", default=1.0))
        for s in ax_sizes:
            if s < MIN_AXIS_SIZE or s % 2 != 0:
                raise DomainError(f"every axis size must be even and >= {MIN_AXIS_SIZE}, got {s}")
        for p in ax_periods:
            if not p > 0:
                raise DomainError(f"periods must be positive, got {p}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "sizes", ax_sizes)
        object.__setattr__(self, "periods", ax_periods)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.sizes

    @property
    def point_count(self) -> int:
        return int(np.prod(self.sizes))

    @property
    def cell_volume(self) -> float:
        return float(np.prod([p / s for p, s in zip(self.periods, self.sizes)]))

    @property
    def volume(self) -> float:
        """Coordinate volume of the fundamental domain."""
        return float(np.prod(self.periods))

    def axis_coordinates(self, axis: int) -> np.ndarray:
        """Sample positions along one real axis (left endpoints, periodic)."""
        if not 0 <= axis < 2 * self.n:
            raise DomainError(f"real axis {axis} out of range for 2n={2 * self.n}")
        s, p = self.sizes[axis], self.periods[axis]
        return np.arange(s) * (p / s)

    def coordinate_field(self, axis: int) -> np.ndarray:
        """Coordinate of one real axis broadcast over the full grid shape."""
        x = self.axis_coordinates(axis)
        shape = [1] * (2 * self.n)
        shape[axis] = self.sizes[axis]
        return np.broadcast_to(x.reshape(shape), self.shape).copy()

    def z(self, i: int) -> np.ndarray:
        """Complex coordinate z^i = x^i + i y^i over the grid."""
        if not 0 <= i < self.n:
            raise DomainError(f"complex axis {i} out of range for n={self.n}")
        return self.coordinate_field(2 * i) + 1j * self.coordinate_field(2 * i + 1)


def product_grid(g1: ComplexGrid, g2: ComplexGrid) -> ComplexGrid:
    return ComplexGrid(g1.n + g2.n, g1.sizes + g2.sizes, g1.periods + g2.periods)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One real or complex value per grid point."""

    grid: ComplexGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != self.grid.shape:
            raise DomainError(f"field shape {vals.shape} does not match grid shape {self.grid.shape}")
        if vals.dtype not in (np.float64, np.complex128):
            vals = vals.astype(np.complex128 if np.iscomplexobj(vals) else np.float64)
        object.__setattr__(self, "values", vals)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def real_values(self, tol: float = 1e-9) -> np.ndarray:
        """Values as real doubles; rejects genuinely complex data."""
        if self.is_real:
            return self.values
        scale = max(1.0, float(np.max(np.abs(self.values))))
        if float(np.max(np.abs(self.values.imag))) > tol * scale:
            raise DomainError("field has a non-negligible imaginary part")
        return np.ascontiguousarray(self.values.real)


def constant_field(grid: ComplexGrid, value: float = 0.0) -> ScalarField:
    return ScalarField(grid, np.full(grid.shape, value, dtype=np.float64))


def field_from_function(grid: ComplexGrid, fn: Callable[..., np.ndarray]) -> ScalarField:
    """Sample fn(x0, y0, x1, y1, ...) on the grid."""
    coords = [grid.coordinate_field(a) for a in range(2 * grid.n)]
    return ScalarField(grid, np.asarray(fn(*coords)))


@lru_cache(maxsize=64)
def _axis_wavenumbers(size: int, period: float) -> np.ndarray:
    """Angular wavenumbers with the Nyquist mode zeroed for odd-order derivatives."""
    k = 2.0 * np.pi * np.fft.fftfreq(size, d=period / size)
    k[size // 2] = 0.0
    k.setflags(write=False)
    return k


def _broadcast_axis(arr: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = arr.shape[0]
    return arr.reshape(shape)


def spectral_axis_derivative(values: np.ndarray, grid: ComplexGrid, axis: int) -> np.ndarray:
    """d/dx along one real axis via FFT. Works for arrays with trailing component axes."""
    if not 0 <= axis < 2 * grid.n:
        raise DomainError(f"real axis {axis} out of range for 2n={2 * grid.n}")
    k = _axis_wavenumbers(grid.sizes[axis], grid.periods[axis])
    spec = np.fft.fft(values, axis=axis)
    spec *= _broadcast_axis(1j * k, axis, values.ndim)
    return np.fft.ifft(spec, axis=axis)


def d_z_values(values: np.ndarray, grid: ComplexGrid, axis: int) -> np.ndarray:
    """Holomorphic Wirtinger derivative d/dz^axis = (d/dx - i d/dy)/2 on raw values."""
    if not 0 <= axis < grid.n:
        raise DomainError(f"complex axis {axis} out of range for n={grid.n}")
    dx = spectral_axis_derivative(values, grid, 2 * axis)
    dy = spectral_axis_derivative(values, grid, 2 * axis + 1)
    return 0.5 * (dx - 1j * dy)


def d_zbar_values(values: np.ndarray, grid: ComplexGrid, axis: int) -> np.ndarray:
    """Conjugate-holomorphic derivative d/dzbar^axis = (d/dx + i d/dy)/2 on raw values."""
    if not 0 <= axis < grid.n:
        raise DomainError(f"complex axis {axis} out of range for n={grid.n}")
    dx = spectral_axis_derivative(values, grid, 2 * axis)
    dy = spectral_axis_derivative(values, grid, 2 * axis + 1)
    return 0.5 * (dx + 1j * dy)


def d_z(f: ScalarField, axis: int) -> ScalarField:
    return ScalarField(f.grid, d_z_values(f.values, f.grid, axis))


def d_zbar(f: ScalarField, axis: int) -> ScalarField:
    return ScalarField(f.grid, d_zbar_values(f.values, f.grid, axis))


def top_form_integral(density: ScalarField, grid: ComplexGrid) -> float:
    """Riemann sum of a real density over the fundamental domain.

    Exact for band-limited periodic integrands up to roundoff (the trapezoid rule
    on a full period integrates every resolved Fourier mode exactly).
    """
    if density.grid != grid:
        raise DomainError("density grid does not match integration grid")
    vals = density.real_values()
    return float(vals.sum() * grid.cell_volume)


def spectral_tail_fraction(values: np.ndarray, grid: ComplexGrid, cutoff: float = 2.0 / 3.0) -> float:
    """Fraction of spectral energy carried by modes beyond `cutoff` of each axis Nyquist.

    Resolution-adequacy diagnostic: well-resolved smooth fields sit far below 1e-8.
    """
    spec = np.fft.fftn(np.asarray(values, dtype=np.complex128), axes=range(2 * grid.n))
    power = np.abs(spec) ** 2
    total = float(power.sum())
    if total == 0.0:
        return 0.0
    tail_mask = np.zeros(grid.shape, dtype=bool)
    for axis in range(2 * grid.n):
        size = grid.sizes[axis]
        freqs = np.abs(np.fft.fftfreq(size) * size)
        axis_tail = freqs >= cutoff * (size // 2)
        tail_mask |= _broadcast_axis(axis_tail, axis, 2 * grid.n)
    extra = tuple(range(2 * grid.n, power.ndim))
    if extra:
        power = power.sum(axis=extra)
    return float(power[tail_mask].sum() / total)


def random_bandlimited_field(
    grid: ComplexGrid, rng: np.random.Generator, max_mode: int = 3, amplitude: float = 1.0
) -> ScalarField:
    """Real band-limited field from seeded random low-frequency modes (mean zero)."""
    vals = np.zeros(grid.shape)
    coords = [grid.coordinate_field(a) / grid.periods[a] for a in range(2 * grid.n)]
    n_terms = max(4, 2 * grid.n * max_mode)
    for _ in range(n_terms):
        ks = rng.integers(-max_mode, max_mode + 1, size=2 * grid.n)
        if not np.any(ks):
            continue
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.normal() / n_terms
        arg = sum(2 * np.pi * k * c for k, c in zip(ks, coords))
        vals += amp * np.cos(arg + phase)
    vals *= amplitude / max(1e-30, np.max(np.abs(vals)))
    return ScalarField(grid, vals)


def grid_mean(f: ScalarField) -> float:
    return float(np.mean(f.real_values()))
