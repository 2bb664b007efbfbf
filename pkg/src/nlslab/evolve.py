"""Strang-split time stepping of ``i u_t = -Lap u + x_N^2 u - |u|^(p-1) u``.

The flow is split into the free kinetic flow, solved exactly in frequency
space, and the pointwise phase rotation ``exp(-i (x_N^2 - |u|^(p-1)) t)``,
solved exactly because ``|u|`` does not change along it. Both substeps are
unitary, so the discrete mass is conserved to roundoff.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .functionals import ModelParams, Parts, transverse_moment
from .grid import Field, boundary_mass, fftn, gradient_norms_sq_hat, ifftn

log = logging.getLogger(__name__)

COMPLETED = "completed"
BLOWUP = "blowup_detected"
BOUNDARY = "boundary_violation"
DT_UNDERFLOW = "dt_underflow"

CSV_COLUMNS = ("t", "mass", "energy", "action", "nehari", "virial_p",
               "moment_f", "grad_sq", "boundary", "status")

ADAPT_CONSTANT = 0.1


@dataclass
class EvolveOptions:
    dt0: float = 1e-3
    t_end: float = 1.0
    sample_every: float = 1e-2
    grad_blowup_factor: float = 1e3
    dt_floor: float = 1e-9
    boundary_mass_cap: float = 1e-6
    boundary_margin: float = 0.1
    linear_only: bool = False
    dealias: bool = False
    adapt_constant: float = ADAPT_CONSTANT

    def __post_init__(self):
        if not self.dt0 > 0:
            raise ValueError("dt0 must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if not self.sample_every > 0:
            raise ValueError("sample_every must be positive")
        if not self.dt_floor < self.dt0:
            raise ValueError("dt_floor must be below dt0")
        for name in ("grad_blowup_factor", "dt_floor", "boundary_mass_cap", "adapt_constant"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class TrajectoryRecord:
    times: list[float] = field(default_factory=list)
    mass: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    action_value: list[float] = field(default_factory=list)
    nehari_value: list[float] = field(default_factory=list)
    virial_p_value: list[float] = field(default_factory=list)
    moment_f: list[float] = field(default_factory=list)
    grad_sq: list[float] = field(default_factory=list)
    boundary: list[float] = field(default_factory=list)
    status: str = "running"
    halt_time: float = 0.0
    steps: int = 0
    min_dt: float = math.inf
    final_state: Field | None = field(default=None, repr=False)

    def sample(self, t: float, f: Field, params: ModelParams, margin: float):
        c = Parts(f, params.p)
        q = c.quadratic(params.omega)
        self.times.append(t)
        self.mass.append(c.mass)
        self.energy.append(0.5 * c.grad_total + 0.5 * c.potential - c.nonlinear / (params.p + 1))
        self.action_value.append(0.5 * q - c.nonlinear / (params.p + 1))
        self.nehari_value.append(q - c.nonlinear)
        self.virial_p_value.append(0.5 * c.grad_transverse
                                   - params.alpha / (2 * (params.p + 1)) * c.nonlinear)
        self.moment_f.append(transverse_moment(f))
        self.grad_sq.append(c.grad_total)
        self.boundary.append(boundary_mass(f, margin))

    def __len__(self):
        return len(self.times)

    def rows(self):
        n = len(self.times)
        for i in range(n):
            yield (self.times[i], self.mass[i], self.energy[i], self.action_value[i],
                   self.nehari_value[i], self.virial_p_value[i], self.moment_f[i],
                   self.grad_sq[i], self.boundary[i],
                   self.status if i == n - 1 else "running")

    def to_csv(self, path, extra: dict[str, list[float]] | None = None):
        """Write one row per sample; ``extra`` columns are appended after ``status``."""
        extra = extra or {}
        for name, col in extra.items():
            if len(col) != len(self.times):
                raise ValueError(f"extra column {name!r} has {len(col)} rows, expected {len(self.times)}")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS + tuple(extra))
            for i, row in enumerate(self.rows()):
                row = row + tuple(col[i] for col in extra.values())
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                            for v in row])

    def summary(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "final_state"}
        return {"status": d["status"], "halt_time": d["halt_time"], "steps": d["steps"],
                "samples": len(self.times), "min_dt": d["min_dt"]}


class _Stepper:
    """Split-step propagator for one grid and exponent.

    Kinetic and potential phases are separable, so they are built from 1D
    exponentials; only the nonlinear phase needs a full-array exponential.
    """

    def __init__(self, grid, params: ModelParams, linear_only: bool, dealias: bool):
        self.grid = grid
        self.params = params
        self.linear_only = linear_only
        self.mask = grid.dealias_mask if dealias else None
        self.power = (params.p - 1) / 2

    def kick(self, u: np.ndarray, tau: float) -> np.ndarray:
        """Exact flow of ``i u_t = (x_N^2 - |u|^(p-1)) u`` for time ``tau``."""
        g = self.grid
        phase = g.axis_view(np.exp(-1j * tau * g.coords[-1] ** 2), g.confined_axis)
        u = u * phase
        if not self.linear_only:
            a2 = u.real * u.real + u.imag * u.imag
            w = a2 if self.power == 1 else (a2 * a2 if self.power == 2 else a2 ** self.power)
            u = u * np.exp((1j * tau) * w)
        return u

    def drift(self, u: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
        """Exact free flow ``i u_t = -Lap u``; returns the state and its spectrum."""
        g = self.grid
        u_hat = fftn(u)
        if self.mask is not None:
            u_hat = u_hat * self.mask
        for j, k in enumerate(g.wavenumbers):
            u_hat = u_hat * g.axis_view(np.exp(-1j * tau * k * k), j)
        return ifftn(u_hat), u_hat

    def step(self, u: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
        """One B(dt/2) A(dt) B(dt/2) step; also returns the post-drift spectrum."""
        v, u_hat = self.drift(self.kick(u, 0.5 * dt), dt)
        return self.kick(v, 0.5 * dt), u_hat


def strang_step(u: Field, dt: float, params: ModelParams,
                linear_only: bool = False, dealias: bool = False) -> Field:
    """Advance ``u`` by ``dt``; a non-finite result comes back flagged ``terminal``.

    A negative ``dt`` runs the same composition backward in time.
    """
    if not (dt != 0 and math.isfinite(dt)):
        raise ValueError("dt must be finite and nonzero")
    values, _ = _Stepper(u.grid, params, linear_only, dealias).step(u.values, dt)
    finite = bool(np.all(np.isfinite(values)))
    return Field(u.grid, values, terminal=not finite)


def adaptive_dt(u, params: ModelParams, opts: EvolveOptions) -> float:
    """``min(dt0, c / (1 + max|u|^(p-1)))`` with ``c = opts.adapt_constant`` (0.1).

    The caller compares the result against ``dt_floor``.
    """
    values = u.values if isinstance(u, Field) else u
    if opts.linear_only:
        return opts.dt0
    peak = float(np.max(np.abs(values)))
    return min(opts.dt0, opts.adapt_constant / (1.0 + peak ** (params.p - 1)))


def evolve(u0: Field, params: ModelParams, opts: EvolveOptions | None = None) -> TrajectoryRecord:
    """Integrate from ``u0`` until ``t_end`` or a halting condition.

    Halting: ``blowup_detected`` when the squared gradient norm exceeds
    ``grad_blowup_factor`` times its initial value or values go non-finite,
    ``dt_underflow`` when the adaptive step drops below ``dt_floor``,
    ``boundary_violation`` when the box margin holds more than
    ``boundary_mass_cap`` of the mass. Steps are clipped so that samples land
    exactly on multiples of ``sample_every``.
    """
    opts = opts or EvolveOptions()
    grid = u0.grid
    rec = TrajectoryRecord()
    rec.sample(0.0, u0, params, opts.boundary_margin)
    grad0 = rec.grad_sq[0]
    mass0 = rec.mass[0]
    u = u0.values.copy()
    stepper = _Stepper(grid, params, opts.linear_only, opts.dealias)

    t = 0.0
    k = 1
    n_samples = max(1, math.ceil(opts.t_end / opts.sample_every - 1e-9))
    snap = 1e-12 * max(1.0, opts.t_end)
    status = COMPLETED if opts.t_end <= 0 else None
    terminal = False
    # ``u`` may be owed a trailing half kick of length ``owed``; consecutive
    # half kicks merge because |u| is invariant under the kick.
    owed = 0.0
    while status is None:
        target = opts.t_end if k >= n_samples else k * opts.sample_every
        dt = adaptive_dt(u, params, opts)
        if dt < opts.dt_floor:
            status = DT_UNDERFLOW
            break
        h = min(dt, target - t)
        v, u_hat = stepper.drift(stepper.kick(u, owed + 0.5 * h), h)
        owed = 0.5 * h
        rec.steps += 1
        rec.min_dt = min(rec.min_dt, h)
        if not np.all(np.isfinite(v)):
            status = BLOWUP
            terminal = True
            u, owed = v, 0.0
            t += h
            break
        u = v
        t = target if target - (t + h) <= snap else t + h
        if sum(gradient_norms_sq_hat(grid, u_hat)) > opts.grad_blowup_factor * grad0:
            status = BLOWUP
            break
        if t >= target:
            u, owed = stepper.kick(u, owed), 0.0
            rec.sample(t, Field(grid, u), params, opts.boundary_margin)
            k += 1
            if rec.boundary[-1] > opts.boundary_mass_cap * mass0:
                status = BOUNDARY
            elif k > n_samples:
                status = COMPLETED

    if owed:
        u = stepper.kick(u, owed)
    rec.status = status
    rec.halt_time = t
    rec.final_state = Field(grid, u, terminal=terminal)
    if status != COMPLETED and not terminal and t > rec.times[-1]:
        rec.sample(t, rec.final_state, params, opts.boundary_margin)
    log.info("evolve halted: %s at t=%.6g after %d steps", status, t, rec.steps)
    return rec
