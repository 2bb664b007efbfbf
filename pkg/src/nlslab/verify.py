"""The identity and property suite behind ``nlslab verify``.

Each check returns a :class:`Check` carrying the measured value, the limit it
is held to and whether it passed; :func:`run_suite` gathers them into a JSON
report. The acceptance tests call the same functions.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .diagnostics import PreconditionError, action_virial_gap, moment_F, random_bumps, virial_check
from .evolve import COMPLETED, EvolveOptions, evolve
from .functionals import (ModelParams, action, action_gradient, energy, heisenberg_gap,
                          j_functional, nehari, nehari_scale, parts, quadratic_form,
                          transverse_rescale, virial_p)
from .grid import Grid, build_grid, inner_real
from .ground_state import GroundState, GroundStateOptions, solve_ground_state

FD_STEP = 1e-4


@dataclass
class Check:
    name: str
    value: float
    limit: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        text = f"{mark} {self.name}: {self.value:.3e} (limit {self.limit:.1e})"
        return f"{text} {self.detail}" if self.detail else text


def _at_most(name, value, limit, detail=""):
    return Check(name, float(value), float(limit), bool(value <= limit), detail)


def _at_least(name, value, limit, detail=""):
    return Check(name, float(value), float(limit), bool(value >= limit), detail)


def gaussian(grid: Grid, amplitude: float = 1.0, width: float = 1.0):
    """``amplitude * exp(-|x|^2 / (2 width^2))``."""
    return grid.from_function(
        lambda *xs: amplitude * np.exp(-sum(x * x for x in xs) / (2 * width * width)))


def gaussian_closed_forms() -> dict[str, float]:
    """Exact values for ``exp(-|x|^2/2)`` in 2D with ``p = 5``, ``omega = 1``."""
    pi = math.pi
    return {"energy": 25 * pi / 36, "action": 43 * pi / 36, "nehari": 13 * pi / 6,
            "j_functional": 5 * pi / 6, "virial_p": 7 * pi / 36,
            "nehari_scale": 7.5 ** 0.25, "moment_F": pi / 2}


def closed_form_checks(grid: Grid | None = None, rtol: float = 1e-8) -> list[Check]:
    grid = grid or build_grid(2, [256, 256], [16.0, 16.0])
    params = ModelParams(2, 5.0, 1.0)
    g = gaussian(grid)
    measured = {"energy": energy(g, params), "action": action(g, params),
                "nehari": nehari(g, params), "j_functional": j_functional(g, params),
                "virial_p": virial_p(g, params), "nehari_scale": nehari_scale(g, params),
                "moment_F": moment_F(g)}
    out = []
    for name, exact in gaussian_closed_forms().items():
        err = abs(measured[name] - exact) / abs(exact)
        out.append(_at_most(f"gaussian {name}", err, rtol))
    return out


def virial_by_rescaling(f, params: ModelParams, h: float = FD_STEP) -> float:
    """``1/2 d/dlam E(f^lam)`` at ``lam = 1`` by a fourth-order centered difference."""
    e = {s: energy(transverse_rescale(f, 1 + s * h), params) for s in (-2, -1, 1, 2)}
    return 0.5 * (8 * (e[1] - e[-1]) - (e[2] - e[-2])) / (12 * h)


def identity_checks(n_fields: int = 50, seed: int = 0, grid: Grid | None = None,
                    params: ModelParams | None = None) -> list[Check]:
    """Algebraic and variational identities over seeded random smooth fields."""
    grid = grid or build_grid(2, [256, 256], [16.0, 16.0])
    params = params or ModelParams(2, 5.0, 1.0)
    rng = np.random.default_rng(seed)
    worst = {"j": 0.0, "euler": 0.0, "ray": 0.0, "virial": 0.0}
    heis = math.inf
    for _ in range(n_fields):
        v = random_bumps(grid, rng)
        c = parts(v, params)
        q = c.quadratic(params.omega)
        s, k, j = action(v, params), nehari(v, params), j_functional(v, params)
        worst["j"] = max(worst["j"], abs(j - (s - k / (params.p + 1))) / abs(j))
        pairing = inner_real(action_gradient(v, params), v)
        worst["euler"] = max(worst["euler"], abs(pairing - k) / q)
        w = nehari_scale(v, params) * v
        worst["ray"] = max(worst["ray"], abs(nehari(w, params)) / quadratic_form(w, params))
        p = virial_p(v, params)
        worst["virial"] = max(worst["virial"],
                              abs(p - virial_by_rescaling(v, params)) / max(1.0, abs(p)))
        heis = min(heis, heisenberg_gap(v))
    detail = f"over {n_fields} fields, seed {seed}"
    return [
        _at_most("J = S - K/(p+1)", worst["j"], 1e-12, detail),
        _at_most("<S'(v), v> = K(v)", worst["euler"], 1e-10, detail),
        _at_most("K(lambda0 v) = 0", worst["ray"], 1e-10, detail),
        _at_most("P = 1/2 dE(v^lam)/dlam", worst["virial"], 1e-6, detail),
        _at_least("Heisenberg gap", heis, -1e-8, detail),
    ]


def small_data_runs(grid: Grid | None = None, amplitude: float = 0.1,
                    dt0: float = 1e-3, sample_every: float = 1e-2, t_end: float = 1.0):
    grid = grid or build_grid(2, [256, 256], [16.0, 16.0])
    params = ModelParams(2, 5.0, 1.0)
    u0 = gaussian(grid, amplitude)
    return evolve(u0, params, EvolveOptions(dt0=dt0, t_end=t_end, sample_every=sample_every))


def _drift(series) -> float:
    a = np.asarray(series)
    return float(np.max(np.abs(a - a[0])) / abs(a[0]))


def conservation_checks(grid: Grid | None = None) -> list[Check]:
    """Mass and energy drift of the small-data run and the second-order signature."""
    coarse = small_data_runs(grid, dt0=1e-3)
    fine = small_data_runs(grid, dt0=5e-4)
    e_coarse, e_fine = _drift(coarse.energy), _drift(fine.energy)
    return [
        Check("small-data run completes", float(coarse.status == COMPLETED), 1.0,
              coarse.status == COMPLETED, coarse.status),
        _at_most("mass drift", _drift(coarse.mass), 1e-11),
        _at_most("energy drift", e_coarse, 1e-6),
        _at_least("energy drift ratio dt0 -> dt0/2", e_coarse / e_fine, 3.0,
                  f"({e_coarse:.2e} -> {e_fine:.2e})"),
    ]


def virial_checks(grid: Grid | None = None) -> list[Check]:
    out = []
    for spacing, limit in ((1e-2, 1e-2), (5e-3, 3e-3)):
        report = virial_check(small_data_runs(grid, sample_every=spacing))
        out.append(_at_most(f"virial residual at spacing {spacing:g}",
                            report.rel_residual, limit))
    return out


def reference_ground_state(grid: Grid | None = None,
                           params: ModelParams | None = None) -> GroundState:
    grid = grid or build_grid(2, [256, 256], [16.0, 16.0])
    params = params or ModelParams(2, 5.0, 1.0)
    opts = GroundStateOptions(step_size=1.0, preconditioner="linear", residual_tol=1e-9)
    return solve_ground_state(params, grid, opts)


def nonpositive_virial_fields(ground: GroundState, params: ModelParams, n_fields: int,
                              seed: int = 0):
    """Seeded smooth fields with ``P <= 0``.

    A random bump ``v`` has ``P(c v) = c^2 a - c^(p+1) b``, so scaling the
    amplitude past ``(a/b)^(1/(p-1))`` makes ``P`` negative; a transverse
    dilation with ``lam >= 1`` then keeps it nonpositive because ``alpha >= 2``.
    Every fifth field perturbs the ground state instead, probing the
    inequality where it is tight.
    """
    grid = ground.profile.grid
    rng = np.random.default_rng(seed)
    for i in range(n_fields):
        if i % 5 == 0:
            v = ground.profile + 0.05 * random_bumps(grid, rng)
        else:
            v = random_bumps(grid, rng)
        c = parts(v, params)
        a = 0.5 * c.grad_transverse
        b = params.alpha / (2 * (params.p + 1)) * c.nonlinear
        amp = (a / b) ** (1 / (params.p - 1)) * rng.uniform(1.0 + 1e-6, 1.6)
        v = transverse_rescale(amp * v, rng.uniform(1.0, 1.3))
        yield v


def gap_sweep(ground: GroundState, params: ModelParams, n_fields: int = 100,
              seed: int = 0) -> tuple[list[float], int]:
    """Gap values over generated fields, and how many fields were rejected."""
    gaps, rejected = [], 0
    for v in nonpositive_virial_fields(ground, params, n_fields, seed):
        try:
            gaps.append(action_virial_gap(v, params, ground.level))
        except PreconditionError:
            rejected += 1
    return gaps, rejected


def gap_checks(ground: GroundState | None = None, n_fields: int = 100,
               seed: int = 0) -> list[Check]:
    params = ModelParams(2, 5.0, 1.0)
    ground = ground or reference_ground_state(params=params)
    gaps, rejected = gap_sweep(ground, params, n_fields, seed)
    tol = -1e-6 * max(1.0, ground.level)
    violations = sum(g < tol for g in gaps)
    return [
        Check("gap sweep fields with P <= 0", float(len(gaps)), float(n_fields),
              len(gaps) == n_fields and rejected == 0, f"{rejected} rejected"),
        _at_least("gap inequality minimum", min(gaps), tol,
                  f"{violations} violations over {len(gaps)} fields, seed {seed}"),
    ]


def run_suite(seed: int = 0, n_identity_fields: int = 50, n_gap_fields: int = 100) -> dict:
    """Every check, grouped, plus an overall verdict."""
    groups = {
        "closed_forms": closed_form_checks(),
        "identities": identity_checks(n_identity_fields, seed),
        "conservation": conservation_checks(),
        "virial": virial_checks(),
        "gap_inequality": gap_checks(n_fields=n_gap_fields, seed=seed),
    }
    return {"passed": all(c.passed for checks in groups.values() for c in checks),
            "groups": {k: [asdict(c) for c in v] for k, v in groups.items()}}
