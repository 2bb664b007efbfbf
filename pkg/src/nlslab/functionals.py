"""Scalar functionals of the partially confined NLS and their identities.

All quantities are evaluated on a :class:`~nlslab.grid.Field` with the
rectangle rule; kinetic terms go through Parseval so that
``sum_j ||d_j v||^2 == <-Lap v, v>`` holds to roundoff.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .grid import (Field, boundary_mass, derivative, fftn, gradient_norms_sq,
                   ifftn, lp_norm_pp, weighted_moment)


class ParameterError(ValueError):
    pass


class BoundaryWarning(UserWarning):
    """A rescaled field has pushed mass into the box margin."""


@dataclass(frozen=True)
class ModelParams:
    n_dims: int
    p: float
    omega: float = 1.0

    def __post_init__(self):
        if int(self.n_dims) != self.n_dims or self.n_dims < 2:
            raise ParameterError(f"n_dims must be an integer >= 2, got {self.n_dims}")
        if not self.p > 1:
            raise ParameterError(f"p must exceed 1, got {self.p}")
        if self.n_dims >= 3 and not self.p < 1 + 4 / (self.n_dims - 2):
            raise ParameterError(
                f"p must be below the energy-critical exponent {1 + 4 / (self.n_dims - 2)}")
        if not self.omega > -1:
            raise ParameterError(f"omega must exceed -1, got {self.omega}")

    @property
    def alpha(self) -> float:
        return (self.n_dims - 1) * (self.p - 1) / 2

    @property
    def instability_regime(self) -> bool:
        # p >= 1 + 4/(N-1), i.e. alpha >= 2
        return self.alpha >= 2

    def to_dict(self) -> dict:
        return {"n_dims": self.n_dims, "p": self.p, "omega": self.omega,
                "alpha": self.alpha, "instability_regime": self.instability_regime}


def _check(f: Field, params: ModelParams):
    if f.grid.n_dims != params.n_dims:
        raise ParameterError(
            f"field is {f.grid.n_dims}-dimensional but params say N={params.n_dims}")


class Parts:
    """Every norm the functionals are assembled from, computed once."""

    __slots__ = ("grad", "mass", "potential", "nonlinear")

    def __init__(self, f: Field, p: float):
        self.grad = gradient_norms_sq(f)
        self.mass = lp_norm_pp(f, 2)
        self.potential = weighted_moment(f, f.grid.n_dims)
        self.nonlinear = lp_norm_pp(f, p + 1)

    @property
    def grad_total(self) -> float:
        return sum(self.grad)

    @property
    def grad_transverse(self) -> float:
        return sum(self.grad[:-1])

    def quadratic(self, omega: float) -> float:
        """``||grad v||^2 + ||x_N v||^2 + omega ||v||^2``."""
        return self.grad_total + self.potential + omega * self.mass


def parts(f: Field, params: ModelParams) -> Parts:
    _check(f, params)
    return Parts(f, params.p)


def x_norm_sq(f: Field) -> float:
    grad = gradient_norms_sq(f)
    return sum(grad) + lp_norm_pp(f, 2) + weighted_moment(f, f.grid.n_dims)


def quadratic_form(f: Field, params: ModelParams) -> float:
    return parts(f, params).quadratic(params.omega)


def energy(f: Field, params: ModelParams) -> float:
    c = parts(f, params)
    return 0.5 * c.grad_total + 0.5 * c.potential - c.nonlinear / (params.p + 1)


def action(f: Field, params: ModelParams) -> float:
    c = parts(f, params)
    return (0.5 * c.quadratic(params.omega)) - c.nonlinear / (params.p + 1)


def nehari(f: Field, params: ModelParams) -> float:
    c = parts(f, params)
    return c.quadratic(params.omega) - c.nonlinear


def j_functional(f: Field, params: ModelParams) -> float:
    p = params.p
    return (p - 1) / (2 * (p + 1)) * quadratic_form(f, params)


def virial_p(f: Field, params: ModelParams) -> float:
    c = parts(f, params)
    return 0.5 * c.grad_transverse - params.alpha / (2 * (params.p + 1)) * c.nonlinear


def nonlinear_term(values: np.ndarray, p: float) -> np.ndarray:
    """``|u|**(p-1) * u`` pointwise."""
    a = np.abs(values)
    return a ** (p - 1) * values


def action_gradient(f: Field, params: ModelParams) -> Field:
    """``-Lap f + x_N^2 f + omega f - |f|^(p-1) f``."""
    _check(f, params)
    g = f.grid
    u = f.values
    kin = ifftn(g.k_squared * fftn(u))
    return Field(g, kin + (g.potential + params.omega) * u - nonlinear_term(u, params.p))


def nehari_scale(f: Field, params: ModelParams) -> float:
    """The ``lambda0 > 0`` with ``K(lambda0 f) = 0``.

    ``K(lambda v) = lambda^2 Q - lambda^(p+1) ||v||_{p+1}^{p+1}`` gives
    ``lambda0 = (Q / ||v||_{p+1}^{p+1})^(1/(p-1))``.
    """
    c = parts(f, params)
    if c.nonlinear <= 0 or c.mass <= 0:
        raise ParameterError("no Nehari ray intersection for a zero field")
    q = c.quadratic(params.omega)
    if q <= 0:
        raise ParameterError("no Nehari ray intersection: quadratic form is not positive")
    return (q / c.nonlinear) ** (1.0 / (params.p - 1))


def _interp_matrix(k: np.ndarray, s: np.ndarray, n: int) -> np.ndarray:
    """Trigonometric interpolation at offsets ``s`` from the first grid point.

    The Nyquist column is split symmetrically so that real fields stay real.
    Targets outside one period read zero instead of a periodic image.
    """
    E = np.exp(1j * np.outer(s, k))
    nyq = n // 2
    E[:, nyq] = np.cos(k[nyq] * s)
    period = 2 * np.pi / k[1]
    E[(s < 0) | (s >= period)] = 0.0
    return E / n


def transverse_rescale(f: Field, lam: float, margin_fraction: float = 0.1,
                       boundary_tol: float = 1e-10) -> Field:
    """``lam^((N-1)/2) f(lam x_1, ..., lam x_{N-1}, x_N)`` by Fourier interpolation.

    Emits :class:`BoundaryWarning` when the result carries more than
    ``boundary_tol`` (relative) mass in the box margin.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    grid = f.grid
    if lam == 1:
        return f.copy()
    out = sfft.fftn(f.values, axes=grid.transverse_axes)
    for j in grid.transverse_axes:
        M = _interp_matrix(grid.wavenumbers[j],
                           lam * grid.coords[j] + grid.half_lengths[j], grid.points[j])
        out = np.moveaxis(np.tensordot(M, np.moveaxis(out, j, 0), axes=(1, 0)), 0, j)
    values = lam ** ((grid.n_dims - 1) / 2) * out
    result = Field(grid, values)
    total = lp_norm_pp(result, 2)
    if total > 0 and boundary_mass(result, margin_fraction) > boundary_tol * total:
        warnings.warn(f"transverse_rescale(lambda={lam}) leaves mass near the box edge",
                      BoundaryWarning, stacklevel=2)
    return result


def heisenberg_gap(f: Field) -> float:
    """``2 ||d_N f|| ||x_N f|| - ||f||^2``; nonnegative for decaying fields."""
    N = f.grid.n_dims
    dN = gradient_norms_sq(f)[-1]
    xN = weighted_moment(f, N)
    return 2.0 * np.sqrt(dN) * np.sqrt(xN) - lp_norm_pp(f, 2)


def momentum_moment(f: Field) -> float:
    """``4 sum_{j<N} Im int conj(u) x_j d_j u``, the time derivative of the transverse moment."""
    grid = f.grid
    total = 0.0
    for j in grid.transverse_axes:
        du = derivative(f, j).values
        xj = grid.axis_view(grid.coords[j], j)
        total += float(np.imag(np.sum(np.conj(f.values) * xj * du)) * grid.cell_volume)
    return 4.0 * total


def transverse_moment(f: Field) -> float:
    """``sum_{j<N} int x_j^2 |f|^2``."""
    return sum(weighted_moment(f, j + 1) for j in f.grid.transverse_axes)
