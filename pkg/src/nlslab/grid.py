"""Periodic tensor-product grids, spectral calculus and quadrature.

The whole space is replaced by a centered periodic box. Every axis except
the last is *transverse* (free); the last axis carries the harmonic wall and
is tagged *confined*. Derivatives are taken by multiplying Fourier
coefficients with ``i k``; integrals use the uniform rectangle rule, which is
exact for trigonometric polynomials on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.fft as sfft

TRANSVERSE = "transverse"
CONFINED = "confined"


def fftn(a: np.ndarray) -> np.ndarray:
    return sfft.fftn(a)


def ifftn(a: np.ndarray) -> np.ndarray:
    return sfft.ifftn(a)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``prod_j [-L_j, L_j)``."""

    n_dims: int
    points: tuple[int, ...]
    half_lengths: tuple[float, ...]

    def __post_init__(self):
        if self.n_dims not in (2, 3):
            raise ValueError(f"n_dims must be 2 or 3, got {self.n_dims}")
        if len(self.points) != self.n_dims or len(self.half_lengths) != self.n_dims:
            raise ValueError("points and half_lengths need one entry per axis")
        for n in self.points:
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"point counts must be even integers >= 8, got {n}")
        for L in self.half_lengths:
            if not (np.isfinite(L) and L > 0):
                raise ValueError(f"half-lengths must be positive, got {L}")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def axis_role(self) -> tuple[str, ...]:
        return (TRANSVERSE,) * (self.n_dims - 1) + (CONFINED,)

    @property
    def transverse_axes(self) -> tuple[int, ...]:
        return tuple(range(self.n_dims - 1))

    @property
    def confined_axis(self) -> int:
        return self.n_dims - 1

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple(2.0 * L / n for n, L in zip(self.points, self.half_lengths))

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """1D coordinate arrays ``-L, -L+dx, ..., L-dx``."""
        return tuple(-L + dx * np.arange(n)
                     for n, L, dx in zip(self.points, self.half_lengths, self.spacing))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """1D wavenumber arrays in FFT order; the lattice is ``(pi/L) * Z``."""
        return tuple(2.0 * np.pi * sfft.fftfreq(n, d=dx)
                     for n, dx in zip(self.points, self.spacing))

    def axis_view(self, arr: np.ndarray, axis: int) -> np.ndarray:
        """Reshape a 1D per-axis array so it broadcasts along ``axis``."""
        shape = [1] * self.n_dims
        shape[axis] = -1
        return arr.reshape(shape)

    @cached_property
    def k_squared(self) -> np.ndarray:
        k2 = np.zeros(self.points)
        for j, k in enumerate(self.wavenumbers):
            k2 = k2 + self.axis_view(k ** 2, j)
        return k2

    @cached_property
    def potential(self) -> np.ndarray:
        """The confining wall ``x_N**2`` as a broadcastable array."""
        return self.axis_view(self.coords[-1] ** 2, self.confined_axis)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask in frequency space."""
        mask = np.ones(self.points, dtype=bool)
        for j, (n, k) in enumerate(zip(self.points, self.wavenumbers)):
            kmax = np.pi / self.spacing[j]
            mask = mask & self.axis_view(np.abs(k) < (2.0 / 3.0) * kmax, j)
        return mask

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.coords, indexing="ij"))

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.points, dtype=complex))

    def field(self, values) -> "Field":
        return Field(self, np.asarray(values, dtype=complex))

    def from_function(self, func) -> "Field":
        """Sample ``func(*mesh)`` on the grid."""
        return self.field(np.broadcast_to(func(*self.mesh()), self.points))

    def to_dict(self) -> dict:
        return {"n_dims": self.n_dims, "points": list(self.points),
                "half_lengths": list(self.half_lengths)}


def build_grid(n_dims: int, points: Sequence[int], half_lengths: Sequence[float]) -> Grid:
    return Grid(int(n_dims), tuple(int(n) for n in points),
                tuple(float(L) for L in half_lengths))


@dataclass(eq=False)
class Field:
    """Complex amplitude on a grid.

    ``terminal`` marks the state an evolution halted on; only such fields may
    carry non-finite entries.
    """

    grid: Grid
    values: np.ndarray
    terminal: bool = field(default=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} does not match grid {self.grid.shape}")
        if not self.terminal and not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    def _wrap(self, values) -> "Field":
        return Field(self.grid, values)

    def _other(self, other):
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return self._wrap(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.values - self._other(other))

    def __rsub__(self, other):
        return self._wrap(self._other(other) - self.values)

    def __mul__(self, other):
        return self._wrap(self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.values / self._other(other))

    def __neg__(self):
        return self._wrap(-self.values)

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.terminal)

    def real(self) -> "Field":
        return self._wrap(self.values.real)

    def conj(self) -> "Field":
        return self._wrap(self.values.conj())

    def abs_max(self) -> float:
        return float(np.max(np.abs(self.values)))


# ---------------------------------------------------------------------------
# quadrature and spectral calculus
# ---------------------------------------------------------------------------

def lp_norm_pp(f: Field, q: float) -> float:
    """``sum |f|**q * dV``, i.e. the q-th power of the discrete L^q norm."""
    if not q >= 1:
        raise ValueError(f"q must be >= 1, got {q}")
    a = np.abs(f.values)
    if q == 2:
        dens = a * a
    else:
        dens = a ** q
    return float(np.sum(dens) * f.grid.cell_volume)


def inner_real(f: Field, h: Field) -> float:
    """``Re sum f * conj(h) * dV``."""
    return float(np.real(np.vdot(h.values, f.values)) * f.grid.cell_volume)


def _spectral_weight(grid: Grid) -> float:
    # Parseval: sum |u|^2 dV = dV / n_tot * sum |u_hat|^2
    return grid.cell_volume / float(np.prod(grid.points))


def gradient_norms_sq_hat(grid: Grid, u_hat: np.ndarray) -> list[float]:
    """Per-axis ``||d_j u||^2`` from Fourier coefficients."""
    power = np.abs(u_hat) ** 2
    w = _spectral_weight(grid)
    out = []
    for j, k in enumerate(grid.wavenumbers):
        axes = tuple(a for a in range(grid.n_dims) if a != j)
        marginal = power.sum(axis=axes)
        out.append(float(np.dot(k ** 2, marginal) * w))
    return out


def gradient_norms_sq(f: Field) -> list[float]:
    return gradient_norms_sq_hat(f.grid, fftn(f.values))


def derivative(f: Field, axis: int) -> Field:
    k = f.grid.axis_view(f.grid.wavenumbers[axis], axis)
    return Field(f.grid, ifftn(1j * k * fftn(f.values)))


def laplacian(f: Field) -> Field:
    return Field(f.grid, ifftn(-f.grid.k_squared * fftn(f.values)))


def weighted_moment(f: Field, axis: int) -> float:
    """``sum x_axis**2 |f|**2 dV``; ``axis`` is 1-based like the coordinates x_1..x_N."""
    j = _axis_index(f.grid, axis)
    dens = np.abs(f.values) ** 2
    axes = tuple(a for a in range(f.grid.n_dims) if a != j)
    marginal = dens.sum(axis=axes)
    return float(np.dot(f.grid.coords[j] ** 2, marginal) * f.grid.cell_volume)


def _axis_index(grid: Grid, axis: int) -> int:
    if not 1 <= axis <= grid.n_dims:
        raise ValueError(f"axis must be in 1..{grid.n_dims}, got {axis}")
    return axis - 1


def translate(f: Field, offsets: Sequence[float]) -> Field:
    """Shift by ``offsets`` along the transverse axes: ``(tau_y f)(x) = f(x - y)``.

    The shift is a phase multiplication in frequency space, so it is unitary
    for any offset and exact for band-limited fields.
    """
    grid = f.grid
    offsets = [float(y) for y in offsets]
    if len(offsets) > grid.n_dims - 1:
        raise ValueError("offsets may only act on transverse axes")
    if not any(offsets):
        return f.copy()
    phase = np.ones((1,) * grid.n_dims, dtype=complex)
    for j, y in enumerate(offsets):
        phase = phase * grid.axis_view(np.exp(-1j * grid.wavenumbers[j] * y), j)
    return Field(grid, ifftn(phase * fftn(f.values)))


def boundary_mass(f: Field, margin_fraction: float) -> float:
    """Largest per-axis L^2 mass inside the outer ``margin_fraction`` shell."""
    if not 0 < margin_fraction < 0.5:
        raise ValueError("margin_fraction must lie in (0, 0.5)")
    grid = f.grid
    dens = np.abs(f.values) ** 2
    worst = 0.0
    for j in range(grid.n_dims):
        x = grid.coords[j]
        L = grid.half_lengths[j]
        edge = np.abs(x) >= (1.0 - 2.0 * margin_fraction) * L - 1e-12 * L
        axes = tuple(a for a in range(grid.n_dims) if a != j)
        marginal = dens.sum(axis=axes)
        worst = max(worst, float(marginal[edge].sum() * grid.cell_volume))
    return worst
