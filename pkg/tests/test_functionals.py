import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from nlslab.diagnostics import random_bumps
from nlslab.functionals import (BoundaryWarning, ModelParams, ParameterError, action,
                                action_gradient, energy, heisenberg_gap, j_functional,
                                nehari, nehari_scale, parts, transverse_rescale, virial_p,
                                x_norm_sq)
from nlslab.grid import gradient_norms_sq, inner_real, lp_norm_pp, translate
from nlslab.verify import gaussian, virial_by_rescaling

PI = math.pi


@pytest.mark.parametrize("func, exact", [
    (energy, 25 * PI / 36), (action, 43 * PI / 36), (nehari, 13 * PI / 6),
    (j_functional, 5 * PI / 6), (virial_p, 7 * PI / 36), (nehari_scale, 7.5 ** 0.25),
])
def test_gaussian_closed_forms(g256, params2d, func, exact):
    assert func(g256, params2d) == pytest.approx(exact, rel=1e-10)


@pytest.mark.parametrize("func", [energy, action, nehari, j_functional, virial_p])
def test_zero_field(grid256, params2d, func):
    assert func(grid256.zeros(), params2d) == 0.0


def test_x_norm(g256, grid256):
    assert x_norm_sq(g256) == pytest.approx(5 * PI / 2, rel=1e-10)
    assert x_norm_sq(grid256.zeros()) == 0.0
    assert x_norm_sq(3 * g256) == pytest.approx(9 * x_norm_sq(g256), rel=1e-14)


def test_action_without_frequency_is_energy(g256):
    p0 = ModelParams(2, 5.0, 0.0)
    assert action(g256, p0) == pytest.approx(energy(g256, p0), rel=1e-15)


def test_gauge_phase_leaves_energy(g256, params2d):
    assert energy(np.exp(0.7j) * g256, params2d) == pytest.approx(energy(g256, params2d),
                                                                 rel=1e-14)


def test_nehari_is_ray_derivative_of_action(grid256, params2d, rng):
    f = random_bumps(grid256, rng)
    h = 1e-4
    fd = (action((1 + h) * f, params2d) - action((1 - h) * f, params2d)) / (2 * h)
    assert fd == pytest.approx(nehari(f, params2d), rel=1e-6)


def test_action_gradient_examples(grid256, g256, params2d):
    grad = action_gradient(g256, params2d)
    assert grad.values[128, 128].real == pytest.approx(2.0, abs=1e-12)
    assert not np.any(action_gradient(grid256.zeros(), params2d).values)


def test_euler_identity(grid256, params2d, rng):
    f = random_bumps(grid256, rng)
    assert inner_real(action_gradient(f, params2d), f) == pytest.approx(
        nehari(f, params2d), rel=1e-10)


def test_j_identity(grid256, params2d, rng):
    f = random_bumps(grid256, rng)
    s, k = action(f, params2d), nehari(f, params2d)
    assert j_functional(f, params2d) == pytest.approx(s - k / 6, rel=1e-12)


def test_nehari_scale(grid256, params2d, rng):
    f = random_bumps(grid256, rng)
    lam = nehari_scale(f, params2d)
    q = parts(lam * f, params2d).quadratic(params2d.omega)
    assert abs(nehari(lam * f, params2d)) <= 1e-10 * q
    with pytest.raises(ParameterError, match="no Nehari ray intersection"):
        nehari_scale(grid256.zeros(), params2d)


def test_nehari_scale_of_ground_state_is_one(ground256, params2d):
    assert nehari_scale(ground256.profile, params2d) == pytest.approx(1.0, abs=1e-10)


def test_transverse_rescale_examples(g256):
    assert np.array_equal(transverse_rescale(g256, 1.0).values, g256.values)
    r = transverse_rescale(g256, 2.0)
    assert lp_norm_pp(r, 2) == pytest.approx(PI, rel=1e-12)
    assert gradient_norms_sq(r)[0] == pytest.approx(2 * PI, rel=1e-10)
    assert gradient_norms_sq(r)[1] == pytest.approx(PI / 2, rel=1e-10)
    expect = g256.grid.from_function(lambda x, y: 2 ** 0.5 * np.exp(-(4 * x * x + y * y) / 2))
    assert np.max(np.abs(r.values - expect.values)) < 1e-12


def test_transverse_rescale_3d():
    from nlslab.grid import build_grid
    grid = build_grid(3, [32, 32, 32], [8.0, 8.0, 8.0])
    g = gaussian(grid)
    r = transverse_rescale(g, 0.8)
    expect = grid.from_function(lambda x, y, z: 0.8 * np.exp(-(0.64 * (x * x + y * y) + z * z) / 2))
    assert np.max(np.abs(r.values - expect.values)) < 1e-10


def test_transverse_rescale_warns_near_edge(g256):
    with pytest.warns(BoundaryWarning):
        transverse_rescale(g256, 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        transverse_rescale(g256, 1.5)
    with pytest.raises(ValueError):
        transverse_rescale(g256, 0.0)


def test_virial_is_half_dilation_derivative(grid256, params2d, rng):
    f = random_bumps(grid256, rng)
    assert virial_by_rescaling(f, params2d) == pytest.approx(virial_p(f, params2d), rel=1e-6)


def test_heisenberg_examples(grid256, g256):
    assert heisenberg_gap(g256) == pytest.approx(0.0, abs=1e-12)
    assert heisenberg_gap(grid256.zeros()) == 0.0


def test_heisenberg_gap_quadrature_oracle(grid256, g256):
    f = g256 * grid256.from_function(lambda x, y: 1 + 0.3 * np.sin(y))
    w = lambda y: np.exp(-y * y)
    m = lambda y: 1 + 0.3 * np.sin(y)
    # the x-factor integrates to sqrt(pi) in every term
    dN = quad(lambda y: w(y) * (0.3 * np.cos(y) - y * m(y)) ** 2, -np.inf, np.inf)[0]
    xN = quad(lambda y: w(y) * (y * m(y)) ** 2, -np.inf, np.inf)[0]
    mass = quad(lambda y: w(y) * m(y) ** 2, -np.inf, np.inf)[0]
    oracle = math.sqrt(PI) * (2 * math.sqrt(dN * xN) - mass)
    assert oracle > 0
    assert heisenberg_gap(f) == pytest.approx(oracle, rel=1e-10)


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_action_homogeneity(grid256, params2d, rng, lam):
    f = random_bumps(grid256, rng)
    c = parts(f, params2d)
    poly = lam ** 2 * c.quadratic(1.0) / 2 - lam ** 6 * c.nonlinear / 6
    assert action(lam * f, params2d) == pytest.approx(poly, rel=1e-10)


FUNCS = [energy, action, nehari, j_functional, virial_p]


@settings(max_examples=20, deadline=None)
@given(theta=st.floats(0, 2 * np.pi), y=st.floats(-2.0, 2.0),
       seed=st.integers(0, 2 ** 32 - 1))
def test_gauge_and_translation_invariance(grid256, params2d, theta, y, seed):
    f = random_bumps(grid256, np.random.default_rng(seed))
    moved = translate(np.exp(1j * theta) * f, [y])
    for func in FUNCS:
        assert func(moved, params2d) == pytest.approx(func(f, params2d), rel=1e-10, abs=1e-12)


def test_gradient_consistency(grid256, params2d):
    rng = np.random.default_rng(7)
    h = 1e-4
    for _ in range(20):
        f, d = random_bumps(grid256, rng), random_bumps(grid256, rng)
        fd = (8 * (action(f + h * d, params2d) - action(f - h * d, params2d))
              - (action(f + 2 * h * d, params2d) - action(f - 2 * h * d, params2d))) / (12 * h)
        pairing = inner_real(action_gradient(f, params2d), d)
        assert pairing == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_model_params_validation():
    assert ModelParams(2, 5.0).alpha == 2.0
    assert ModelParams(2, 5.0).instability_regime
    assert not ModelParams(2, 3.0).instability_regime
    assert ModelParams(3, 3.0).instability_regime
    assert ModelParams(3, 3.0).alpha == 2.0
    for bad in [(2, 1.0, 1.0), (3, 5.0, 1.0), (2, 5.0, -1.0), (1, 3.0, 1.0)]:
        with pytest.raises(ParameterError):
            ModelParams(*bad)


def test_dimension_mismatch(g256):
    with pytest.raises(ParameterError):
        energy(g256, ModelParams(3, 3.0))
