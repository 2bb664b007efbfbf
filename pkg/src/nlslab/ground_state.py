"""Ground states by projected gradient descent on the Nehari manifold.

Each iterate is pushed down the action gradient and then pulled back onto
``{K = 0}`` along its own ray, where the projection has a closed form. On the
manifold the action coincides with the quadratic functional ``J``, so the
monitored level is the quantity being minimized.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .functionals import (ModelParams, ParameterError, action, action_gradient,
                          nehari, nehari_scale, parts)
from .grid import Field, Grid, fftn, ifftn, lp_norm_pp, translate

log = logging.getLogger(__name__)

PRECONDITIONERS = ("none", "helmholtz", "linear")


class NonConvergenceError(RuntimeError):
    """Raised when the iteration budget runs out; ``best`` holds the last iterate."""

    def __init__(self, message: str, best: "GroundState"):
        super().__init__(message)
        self.best = best


@dataclass
class GroundStateOptions:
    step_size: float = 0.01
    max_iters: int = 20000
    residual_tol: float = 1e-6
    recenter_every: int = 10
    seed_width: tuple[float, ...] | float = 1.0
    preconditioner: str = "none"
    min_step: float = 1e-12

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if self.recenter_every < 1:
            raise ValueError("recenter_every must be >= 1")
        if self.preconditioner not in PRECONDITIONERS:
            raise ValueError(f"preconditioner must be one of {PRECONDITIONERS}")


@dataclass
class GroundState:
    profile: Field
    omega: float
    level: float
    residual: float
    iterations: int
    nehari_value: float = 0.0
    history: list[float] = field(default_factory=list, repr=False)

    def certificate(self, params: ModelParams) -> dict:
        return {"omega": self.omega, "p": params.p, "level": self.level,
                "residual": self.residual, "nehari_value": self.nehari_value,
                "iterations": self.iterations, "grid": self.profile.grid.to_dict()}


def nehari_project(f: Field, params: ModelParams) -> Field:
    """Rescale ``f`` along its ray onto the Nehari manifold."""
    return nehari_scale(f, params) * f


def centroid(f: Field) -> list[float]:
    grid = f.grid
    dens = np.abs(f.values) ** 2
    total = dens.sum()
    out = []
    for j in grid.transverse_axes:
        axes = tuple(a for a in range(grid.n_dims) if a != j)
        out.append(float(np.dot(grid.coords[j], dens.sum(axis=axes)) / total))
    return out


def center_transverse(f: Field, tol: float = 1e-12, max_passes: int = 4) -> Field:
    """Shift ``f`` along the transverse axes so its ``|f|^2`` centroid sits at the origin."""
    if not np.any(f.values):
        raise ParameterError("cannot center a zero field")
    L = max(f.grid.half_lengths)
    for _ in range(max_passes):
        c = centroid(f)
        if max(abs(y) for y in c) <= tol * L:
            break
        f = translate(f, [-y for y in c])
    return f


class _Preconditioner:
    """Applies an approximate inverse of the linear part ``-Lap + x_N^2 + omega``."""

    def __init__(self, grid: Grid, omega: float, kind: str):
        self.kind = kind
        self.grid = grid
        if kind == "helmholtz":
            self.symbol = 1.0 / (grid.k_squared + 1.0 + omega)
        elif kind == "linear":
            # exact inverse: Fourier in the transverse axes, eigenbasis of the
            # 1D spectral oscillator on the confined axis
            n = grid.points[-1]
            k = grid.wavenumbers[-1]
            d2 = np.real(sfft.ifft(-(k ** 2)[:, None] * sfft.fft(np.eye(n), axis=0), axis=0))
            h = -0.5 * (d2 + d2.T) + np.diag(grid.coords[-1] ** 2)
            evals, self.basis = np.linalg.eigh(h)
            kt2 = np.zeros(grid.points[:-1])
            for j in grid.transverse_axes:
                kt2 = kt2 + grid.axis_view(grid.wavenumbers[j] ** 2, j)[..., 0]
            self.symbol = 1.0 / (kt2[..., None] + evals + omega)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        if self.kind == "none":
            return r
        if self.kind == "helmholtz":
            return ifftn(self.symbol * fftn(r))
        axes = self.grid.transverse_axes
        rh = sfft.fftn(r, axes=axes) @ self.basis
        return sfft.ifftn((self.symbol * rh) @ self.basis.T, axes=axes)


def gaussian_seed(grid: Grid, width) -> Field:
    widths = np.broadcast_to(np.asarray(width, dtype=float), (grid.n_dims,))
    arg = sum(x ** 2 / (2 * w ** 2) for x, w in zip(grid.mesh(), widths))
    return grid.field(np.exp(-arg))


def _residual(f: Field, params: ModelParams) -> tuple[Field, float]:
    g = action_gradient(f, params)
    return g, float(np.sqrt(lp_norm_pp(g, 2) / lp_norm_pp(f, 2)))


def solve_ground_state(params: ModelParams, grid: Grid,
                       opts: GroundStateOptions | None = None,
                       seed: Field | None = None) -> GroundState:
    """Minimize the action on the Nehari manifold.

    Iterates ``v <- project(center(v - tau * M^{-1} S'(v)))`` where ``M`` is
    the selected preconditioner; ``tau`` is halved whenever the action would
    rise. Raises :class:`NonConvergenceError` when ``max_iters`` is exhausted.
    """
    opts = opts or GroundStateOptions()
    if not params.omega > -1:
        raise ParameterError(f"omega must exceed -1, got {params.omega}")
    if grid.n_dims != params.n_dims:
        raise ParameterError("grid and params disagree on the dimension")
    precond = _Preconditioner(grid, params.omega, opts.preconditioner)

    v = gaussian_seed(grid, opts.seed_width) if seed is None else seed.real()
    v = nehari_project(v, params)
    level = action(v, params)
    tau = opts.step_size
    history = [level]

    def result(it, res):
        return GroundState(v, params.omega, level, res, it, nehari(v, params), history)

    it = 0
    while True:
        grad, res = _residual(v, params)
        if res <= opts.residual_tol:
            break
        if it >= opts.max_iters:
            raise NonConvergenceError(
                f"no convergence after {it} iterations (residual {res:.3e})", result(it, res))
        direction = np.real(precond(grad.values))
        it += 1
        while True:
            w = Field(grid, v.values.real - tau * direction)
            if it % opts.recenter_every == 0:
                w = center_transverse(w).real()
            w = nehari_project(w, params)
            new_level = action(w, params)
            if new_level <= level + 1e-14 * abs(level):
                break
            tau *= 0.5
            if tau < opts.min_step:
                raise NonConvergenceError(
                    f"step size collapsed at iteration {it}", result(it, res))
            log.debug("iteration %d: action rose, step halved to %g", it, tau)
        v, level = w, new_level
        history.append(level)
        if it % 500 == 0:
            log.info("iteration %d: level %.12g residual %.3e", it, level, res)

    v = _positive(v)
    level = action(v, params)
    _, res = _residual(v, params)
    return GroundState(v, params.omega, level, res, it, nehari(v, params), history)


def _positive(f: Field) -> Field:
    """Real, nonnegative representative (the global sign is a gauge choice)."""
    u = f.values.real
    if u.sum() < 0:
        u = -u
    return Field(f.grid, u)


def q_scale(f: Field, params: ModelParams) -> float:
    return parts(f, params).quadratic(params.omega)
