"""Post-processing checks on trajectories: virial identity, invariant set, blow-up bound.

The transverse moment ``F(t) = sum_{j<N} int x_j^2 |u|^2`` satisfies
``F'' = 16 P(u)``. Inside the set ``{S < d, P < 0}`` one has
``P(u(t)) <= S(u0) - d < 0``, so ``F`` lies under a downward parabola and
must vanish in finite time; the positive root bounds the blow-up time.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .evolve import BLOWUP, BOUNDARY, COMPLETED, DT_UNDERFLOW, TrajectoryRecord
from .functionals import (ModelParams, ParameterError, action, momentum_moment, parts,
                          transverse_moment, virial_p)
from .grid import Field, translate

VALID = "valid"
INVALID = "invalid"
INCONCLUSIVE = "inconclusive"

SLACK = 0.1


class PreconditionError(ValueError):
    """The inequality being checked is not claimed for this input."""


def moment_F(f: Field) -> float:
    return transverse_moment(f)


def moment_F_prime(f: Field) -> float:
    """Analytic ``F'`` from the momentum-type integral ``4 sum Im int conj(u) x_j d_j u``."""
    return momentum_moment(f)


def _uniform_prefix(times: np.ndarray, rtol: float = 1e-9) -> int:
    """Length of the leading run of uniformly spaced samples."""
    if len(times) < 2:
        return len(times)
    h = times[1] - times[0]
    n = 2
    while n < len(times) and abs((times[n] - times[n - 1]) - h) <= rtol * h:
        n += 1
    return n


def second_difference(t: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Three-point second divided differences ``2 F[t_{i-1}, t_i, t_{i+1}]``.

    Each value is a positively weighted average of ``F''`` over
    ``[t_{i-1}, t_{i+1}]``, so an upper bound on ``F''`` carries over exactly.
    Works on nonuniform samples.
    """
    t = np.asarray(t, dtype=float)
    F = np.asarray(F, dtype=float)
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    return 2.0 * ((F[2:] - F[1:-1]) / h1 - (F[1:-1] - F[:-2]) / h0) / (h0 + h1)


@dataclass
class VirialReport:
    times: list[float]
    F_series: list[float]
    F_second_diff: list[float]
    sixteen_p_series: list[float]
    max_residual: float
    rel_residual: float
    spacing: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def virial_check(record: TrajectoryRecord) -> VirialReport:
    """Compare a fourth-order second difference of ``F`` with ``16 P`` at interior samples."""
    t = np.asarray(record.times, dtype=float)
    n = _uniform_prefix(t)
    if n < 5:
        raise ValueError(f"virial_check needs >= 5 uniformly spaced samples, got {n}")
    t = t[:n]
    F = np.asarray(record.moment_f[:n])
    P16 = 16.0 * np.asarray(record.virial_p_value[:n])
    h = t[1] - t[0]
    d2 = (-F[:-4] + 16 * F[1:-3] - 30 * F[2:-2] + 16 * F[3:-1] - F[4:]) / (12 * h * h)
    resid = np.abs(d2 - P16[2:-2])
    max_resid = float(resid.max())
    return VirialReport(times=t[2:-2].tolist(), F_series=F.tolist(),
                        F_second_diff=d2.tolist(), sixteen_p_series=P16[2:-2].tolist(),
                        max_residual=max_resid,
                        rel_residual=max_resid / max(1.0, float(np.abs(P16).max())),
                        spacing=float(h))


def in_blowup_set(f: Field, params: ModelParams, d_level: float) -> bool:
    """Membership in ``{S < d, P < 0}`` with a strict ``1e-12`` relative margin."""
    s = action(f, params)
    p = virial_p(f, params)
    scale = max(1.0, abs(d_level))
    return s < d_level - 1e-12 * scale and p < -1e-12 * scale


def _in_set_values(s: float, p: float, d_level: float) -> bool:
    scale = max(1.0, abs(d_level))
    return s < d_level - 1e-12 * scale and p < -1e-12 * scale


def action_virial_gap(f: Field, params: ModelParams, d_level: float, p_tol: float = 1e-10) -> float:
    """``S(f) - P(f) - d``; nonnegative whenever ``P(f) <= 0`` in the instability regime.

    ``P(f)`` up to ``p_tol`` times the transverse kinetic term counts as
    nonpositive, so a converged ground state (``P = 0`` to roundoff) is accepted.
    """
    if not params.instability_regime:
        raise PreconditionError("the gap inequality needs p >= 1 + 4/(N-1)")
    if not np.any(f.values):
        raise PreconditionError("the gap inequality needs a nonzero field")
    c = parts(f, params)
    p = 0.5 * c.grad_transverse - params.alpha / (2 * (params.p + 1)) * c.nonlinear
    if p > p_tol * 0.5 * c.grad_transverse:
        raise PreconditionError(f"the gap inequality needs P(f) <= 0, got {p:.3e}")
    return 0.5 * c.quadratic(params.omega) - c.nonlinear / (params.p + 1) - p - d_level


lemma1_gap = action_virial_gap


def tmax_upper_bound(f0: float, f0_prime: float, gap: float) -> float:
    """Positive root of ``8 gap t^2 + f0' t + f0``."""
    if not gap < 0:
        raise PreconditionError("no blow-up time bound unless S(u0) < d")
    if not f0 > 0:
        raise PreconditionError("the transverse moment must be positive")
    a = 8.0 * gap
    disc = f0_prime * f0_prime - 4.0 * a * f0
    # a < 0 and f0 > 0, so disc > b^2 and exactly one root is positive
    return (-f0_prime - math.sqrt(disc)) / (2.0 * a)


@dataclass
class BlowupCertificate:
    s_omega_u0: float
    d_level: float
    p_u0: float
    gap: float
    f0: float
    f0_prime: float
    f0_prime_analytic: float
    t_upper: float | None
    halted_at: float
    halt_status: str
    in_set_along_flow: bool
    grad_growth: float
    concavity_max: float | None
    concavity_bound: float
    concavity_ok: bool
    slack: float = SLACK
    status: str = INVALID
    reasons: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.status == VALID

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def certify_blowup(u0: Field, params: ModelParams, ground, record: TrajectoryRecord,
                   slack: float = SLACK, concavity_tol: float = 0.05) -> BlowupCertificate:
    """Assemble the finite-time blow-up certificate for a run started at ``u0``.

    Valid when ``S(u0) < d``, ``P(u0) < 0``, the run halted on a blow-up
    indicator, every sample stayed in ``{S < d, P < 0}`` and the halt time is
    within ``(1 + slack)`` of the parabola root. A run stopped by the box
    boundary is ``inconclusive``.

    The largest second divided difference of ``F`` is reported against
    ``16 gap`` plus ``concavity_tol`` of its size; it measures how well the
    run resolves the collapse and does not enter the status.
    """
    d = ground.level if hasattr(ground, "level") else float(ground)
    s0 = action(u0, params)
    p0 = virial_p(u0, params)
    gap = s0 - d
    t = np.asarray(record.times, dtype=float)
    F = np.asarray(record.moment_f, dtype=float)
    f0 = float(F[0])
    if len(t) >= 3:
        h = t[1] - t[0]
        f0_prime = float((-3 * F[0] + 4 * F[1] - F[2]) / (2 * h))
    else:
        f0_prime = float("nan")
    f0_prime_analytic = moment_F_prime(u0)

    t_upper = None
    if gap < 0 and f0 > 0 and math.isfinite(f0_prime):
        t_upper = tmax_upper_bound(f0, f0_prime, gap)

    in_set = all(_in_set_values(s, p, d) for s, p in
                 zip(record.action_value, record.virial_p_value))
    grad = np.asarray(record.grad_sq)
    concavity_max = float(second_difference(t, F).max()) if len(t) >= 3 else None
    bound = 16.0 * gap + concavity_tol * 16.0 * abs(gap)
    concavity_ok = concavity_max is not None and concavity_max <= bound

    reasons = []
    if not gap < 0:
        reasons.append("S(u0) is not below d")
    if not p0 < 0:
        reasons.append("P(u0) is not negative")
    if record.status not in (BLOWUP, DT_UNDERFLOW):
        reasons.append(f"run halted with status {record.status}")
    if not in_set:
        reasons.append("trajectory left {S < d, P < 0}")
    if t_upper is None or record.halt_time > t_upper * (1 + slack):
        reasons.append("halt time exceeds the parabola bound")

    if record.status == BOUNDARY:
        status = INCONCLUSIVE
    elif reasons:
        status = INVALID
    else:
        status = VALID
    return BlowupCertificate(
        s_omega_u0=s0, d_level=d, p_u0=p0, gap=gap, f0=f0, f0_prime=f0_prime,
        f0_prime_analytic=f0_prime_analytic, t_upper=t_upper,
        halted_at=record.halt_time, halt_status=record.status, in_set_along_flow=in_set,
        grad_growth=float(grad.max() / grad[0]), concavity_max=concavity_max,
        concavity_bound=bound, concavity_ok=concavity_ok, slack=slack, status=status,
        reasons=reasons)


def virial_columns(record: TrajectoryRecord) -> dict[str, list[float]]:
    """Per-sample ``F''`` (three-point, NaN at the ends) and ``16 P`` for the CSV export."""
    t = np.asarray(record.times, dtype=float)
    d2 = [math.nan] * len(t)
    if len(t) >= 3:
        d2[1:-1] = second_difference(t, np.asarray(record.moment_f)).tolist()
    return {"f_second_diff": d2,
            "sixteen_p": [16.0 * p for p in record.virial_p_value]}


def random_bumps(grid, rng: np.random.Generator, n_bumps: int | None = None,
                 complex_values: bool = True) -> Field:
    """A smooth localized field: a sum of Gaussian bumps with random phases and tilts."""
    if n_bumps is None:
        n_bumps = int(rng.integers(1, 4))
    mesh = grid.mesh()
    out = np.zeros(grid.points, dtype=complex)
    for _ in range(n_bumps):
        arg = np.zeros(grid.points)
        tilt = np.zeros(grid.points)
        for j, x in enumerate(mesh):
            L = grid.half_lengths[j]
            center = rng.uniform(-0.15, 0.15) * L
            width = rng.uniform(0.7, 1.5)
            arg = arg + (x - center) ** 2 / (2 * width ** 2)
            if complex_values:
                tilt = tilt + rng.uniform(-1.0, 1.0) * x
        amp = rng.uniform(0.3, 1.2)
        phase = rng.uniform(0, 2 * np.pi) if complex_values else 0.0
        out += amp * np.exp(-arg) * np.exp(1j * (tilt + phase))
    return Field(grid, out)


def shifted(f: Field, y) -> Field:
    return translate(f, y)
