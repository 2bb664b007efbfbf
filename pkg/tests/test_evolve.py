import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlslab.evolve import (BLOWUP, BOUNDARY, COMPLETED, CSV_COLUMNS, DT_UNDERFLOW,
                           EvolveOptions, adaptive_dt, evolve, strang_step)
from nlslab.functionals import ModelParams
from nlslab.grid import lp_norm_pp, translate
from nlslab.verify import gaussian


def _l2(f):
    return math.sqrt(lp_norm_pp(f, 2))


@settings(max_examples=20, deadline=None)
@given(dt=st.floats(1e-5, 0.05), amp=st.floats(0.1, 1.5))
def test_step_conserves_mass(small_grid, params2d, dt, amp):
    u = gaussian(small_grid, amp) * small_grid.from_function(lambda x, y: np.exp(0.5j * x))
    out = strang_step(u, dt, params2d)
    assert lp_norm_pp(out, 2) == pytest.approx(lp_norm_pp(u, 2), rel=1e-13)


def test_step_consistency(g256, params2d):
    u = 0.5 * g256
    d1 = _l2(strang_step(u, 1e-3, params2d) - u)
    d2 = _l2(strang_step(u, 5e-4, params2d) - u)
    assert d1 == pytest.approx(2 * d2, rel=1e-2)


def test_step_rejects_zero_dt(g256, params2d):
    with pytest.raises(ValueError):
        strang_step(g256, 0.0, params2d)


@pytest.mark.parametrize("linear_only", [True, False])
def test_time_reversibility(g256, params2d, linear_only):
    u = 0.8 * translate(g256, [0.3])
    there = strang_step(u, 1e-2, params2d, linear_only=linear_only)
    back = strang_step(there, -1e-2, params2d, linear_only=linear_only)
    assert np.max(np.abs(back.values - u.values)) < 1e-10


def test_linear_eigenstate(grid256, params2d):
    k = 3 * math.pi / 16
    u0 = grid256.from_function(lambda x, y: np.exp(1j * k * x) * np.exp(-y * y / 2))
    u = u0
    for _ in range(1000):
        u = strang_step(u, 1e-3, params2d, linear_only=True)
    exact = np.exp(-1j * (k * k + 1) * 1.0) * u0.values
    assert np.max(np.abs(u.values - exact)) < 1e-6


def test_second_order_convergence(g256, params2d):
    u0 = 0.7 * g256

    def run(dt):
        u = u0
        for _ in range(round(0.1 / dt)):
            u = strang_step(u, dt, params2d)
        return u

    ref = run(1.25e-4)
    e1, e2 = _l2(run(1e-3) - ref), _l2(run(5e-4) - ref)
    assert 3.5 < e1 / e2 < 4.5


def test_adaptive_dt(grid256, params2d):
    opts = EvolveOptions(dt0=1e-3)
    assert adaptive_dt(0.1 * gaussian(grid256), params2d, opts) == 1e-3
    a = 20.0
    u1, u2 = a * gaussian(grid256), 2 ** 0.25 * a * gaussian(grid256)
    ratio = adaptive_dt(u2, params2d, opts) / adaptive_dt(u1, params2d, opts)
    assert 0.4 <= ratio <= 0.6
    assert adaptive_dt(1e6 * gaussian(grid256), params2d, opts) < 1e-20


def test_zero_horizon(g256, params2d):
    rec = evolve(g256, params2d, EvolveOptions(t_end=0.0))
    assert rec.status == COMPLETED and len(rec) == 1 and rec.times == [0.0]


def test_small_data_run(g256, params2d):
    rec = evolve(0.1 * g256, params2d, EvolveOptions(t_end=0.2, sample_every=0.01))
    assert rec.status == COMPLETED
    assert rec.times[-1] == 0.2
    assert np.allclose(rec.times, 0.01 * np.arange(21), atol=1e-15, rtol=0)
    assert np.all(np.diff(rec.times) > 0)
    series = [rec.mass, rec.energy, rec.action_value, rec.nehari_value, rec.virial_p_value,
              rec.moment_f, rec.grad_sq, rec.boundary]
    assert all(len(s) == len(rec.times) for s in series)
    assert abs(rec.mass[-1] - rec.mass[0]) <= 1e-11 * rec.mass[0]
    assert abs(rec.energy[-1] - rec.energy[0]) <= 1e-6 * rec.energy[0]


def test_dealiased_run_conserves_mass(g256, params2d):
    rec = evolve(0.5 * g256, params2d, EvolveOptions(t_end=0.05, dealias=True))
    assert rec.status == COMPLETED
    assert abs(rec.mass[-1] - rec.mass[0]) <= 1e-11 * rec.mass[0]


def test_scaled_ground_state_blows_up(ground256, params2d):
    opts = EvolveOptions(t_end=1.0, sample_every=1e-3, grad_blowup_factor=10,
                         adapt_constant=0.01)
    rec = evolve(1.2 * ground256.profile, params2d, opts)
    assert rec.status == BLOWUP
    assert rec.grad_sq[-1] > 10 * rec.grad_sq[0]
    assert rec.halt_time < 1.0
    assert rec.times[-1] == rec.halt_time


def test_boundary_violation(g256, params2d):
    rec = evolve(translate(0.1 * g256, [13.0]), params2d, EvolveOptions(t_end=0.1))
    assert rec.status == BOUNDARY
    assert rec.halt_time == pytest.approx(0.01)


def test_dt_underflow(g256, params2d):
    opts = EvolveOptions(dt0=1e-3, dt_floor=5e-4)
    rec = evolve(10.0 * g256, params2d, opts)
    assert rec.status == DT_UNDERFLOW
    assert rec.halt_time == 0.0 and rec.steps == 0


def test_csv_export(tmp_path, g256, params2d):
    rec = evolve(0.1 * g256, params2d, EvolveOptions(t_end=0.03))
    path = tmp_path / "traj.csv"
    rec.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 1 + len(rec.times)
    assert rows[-1][-1] == COMPLETED and rows[1][-1] == "running"
    assert float(rows[2][1]) == rec.mass[1]
    rec.to_csv(path, {"extra": [1.0] * len(rec.times)})
    assert list(csv.reader(open(path)))[0][-1] == "extra"
    with pytest.raises(ValueError):
        rec.to_csv(path, {"extra": [1.0]})


@pytest.mark.parametrize("bad", [dict(dt0=0), dict(t_end=-1), dict(sample_every=0),
                                 dict(dt_floor=1e-2), dict(boundary_mass_cap=0),
                                 dict(grad_blowup_factor=-1)])
def test_options_validation(bad):
    with pytest.raises(ValueError):
        EvolveOptions(**bad)


def test_three_dimensional_step():
    from nlslab.grid import build_grid
    params = ModelParams(3, 3.0, 1.0)
    grid = build_grid(3, [32, 32, 32], [8.0, 8.0, 8.0])
    u = 0.5 * gaussian(grid)
    rec = evolve(u, params, EvolveOptions(t_end=0.05))
    assert rec.status == COMPLETED
    assert abs(rec.mass[-1] - rec.mass[0]) <= 1e-12 * rec.mass[0]
