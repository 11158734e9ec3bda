import math

import numpy as np
import pytest

from glimmrcm.errors import IntegrationFailure, NonConvex
from glimmrcm.oracle import (OracleSolution, characteristics_linear,
                             fine_grid_reference, ode_reference,
                             scalar_riemann_exact)
from glimmrcm.scheme import StaggeredGrid, riemann_data, run
from glimmrcm.sequence import SamplingSequence
from glimmrcm.system import builtin_system


def _half_square(u):
    return 0.5 * u * u


# ---------------------------------------------------------------------------
# exact scalar Riemann solutions


def test_shock_travels_at_rankine_hugoniot_speed():
    oracle = scalar_riemann_exact(_half_square, 1.0, 0.0)
    assert oracle(0.49, 1.0) == pytest.approx([1.0])
    assert oracle(0.51, 1.0) == pytest.approx([0.0])
    assert oracle(0.98, 2.0) == pytest.approx([1.0])
    # initial data at t = 0
    assert oracle(-0.01, 0.0) == pytest.approx([1.0])
    assert oracle(0.01, 0.0) == pytest.approx([0.0])


def test_rarefaction_interior_is_self_similar():
    oracle = scalar_riemann_exact(_half_square, 0.0, 1.0)
    assert oracle(0.3, 1.0) == pytest.approx([0.3], abs=1e-9)
    assert oracle(0.7, 2.0) == pytest.approx([0.35], abs=1e-9)
    assert oracle(-0.1, 1.0) == pytest.approx([0.0])
    assert oracle(1.1, 1.0) == pytest.approx([1.0])


def test_constant_data_stays_constant():
    oracle = scalar_riemann_exact(_half_square, 0.4, 0.4)
    assert oracle(-5.0, 3.0) == pytest.approx([0.4])
    assert oracle(5.0, 3.0) == pytest.approx([0.4])


def test_affine_flux_degenerates_to_transport():
    oracle = scalar_riemann_exact(lambda u: 2.0 * u + 1.0, 0.0, 1.0)
    assert oracle(1.99, 1.0) == pytest.approx([0.0])
    assert oracle(2.01, 1.0) == pytest.approx([1.0])
    # same discontinuity speed with the jump orientation reversed
    oracle = scalar_riemann_exact(lambda u: 2.0 * u + 1.0, 1.0, 0.0)
    assert oracle(1.99, 1.0) == pytest.approx([1.0])
    assert oracle(2.01, 1.0) == pytest.approx([0.0])


def test_explicit_derivative_matches_numeric_one():
    a = scalar_riemann_exact(_half_square, 0.0, 1.0)
    b = scalar_riemann_exact(_half_square, 0.0, 1.0, dflux=lambda u: u)
    for x in (-0.2, 0.15, 0.62, 1.3):
        assert a(x, 1.0) == pytest.approx(b(x, 1.0), abs=1e-7)


def test_nonconvex_flux_is_rejected():
    with pytest.raises(NonConvex):
        scalar_riemann_exact(lambda u: math.sin(3.0 * u), 0.0, 1.0)


def test_vectorized_evaluation_and_window():
    oracle = scalar_riemann_exact(_half_square, 1.0, 0.0)
    out = oracle(np.array([0.0, 0.4, 0.6]), 1.0)
    assert out.shape == (3, 1)
    np.testing.assert_allclose(out[:, 0], [1.0, 1.0, 0.0])
    with pytest.raises(IntegrationFailure):
        oracle(0.0, -0.5)
    assert oracle.provenance == "closed_form"


# ---------------------------------------------------------------------------
# method of characteristics


def test_constant_coefficient_decay_is_exact():
    # u_t + u_x + u = 0  ->  u(x, t) = exp(-t) u0(x - t)
    def u0(x):
        return math.exp(-x * x)

    oracle = characteristics_linear(a=lambda x, t: 1.0,
                                    g=lambda u, x, t: u,
                                    U0=u0, a_x=lambda x, t: 0.0)
    for x, t in ((0.3, 0.5), (1.2, 1.0), (-0.7, 0.25)):
        exact = math.exp(-t) * u0(x - t)
        assert oracle(x, t) == pytest.approx([exact], abs=1e-12)


def test_variable_coefficient_conserves_mass():
    # u_t + (a(x) u)_x = 0 preserves the integral of u
    def a(x, t):
        return 1.0 + 0.2 * math.sin(x)

    def u0(x):
        return math.exp(-4.0 * x * x)

    oracle = characteristics_linear(a, g=lambda u, x, t: 0.0, U0=u0,
                                    step=5e-3)
    xs = np.linspace(-6.0, 6.0, 401)
    mass0 = np.trapezoid([u0(x) for x in xs], xs)
    mass1 = np.trapezoid(oracle(xs, 0.5)[:, 0], xs)
    assert mass1 == pytest.approx(mass0, rel=1e-6)


def test_characteristics_honor_initial_time():
    oracle = characteristics_linear(a=lambda x, t: 1.0,
                                    g=lambda u, x, t: 0.0,
                                    U0=lambda x: math.cos(x))
    assert oracle(0.7, 0.0) == pytest.approx([math.cos(0.7)])
    assert oracle.provenance == "characteristics"


# ---------------------------------------------------------------------------
# source-only ODE reference


def test_ode_reference_matches_closed_form():
    # U' = -exp(-t) U  ->  U(t) = U0 exp(exp(-t) - 1)
    oracle = ode_reference(lambda U, t: math.exp(-t) * U,
                           np.array([0.4, -1.0]))
    expected = np.array([0.4, -1.0]) * math.exp(math.exp(-1.0) - 1.0)
    np.testing.assert_allclose(oracle(0.0, 1.0), expected, rtol=1e-10)


def test_ode_reference_is_space_independent():
    oracle = ode_reference(lambda U, t: U, np.array([1.0]))
    np.testing.assert_allclose(oracle(5.0, 0.8), oracle(-3.0, 0.8))
    np.testing.assert_allclose(oracle(0.0, 0.8), [math.exp(-0.8)],
                               rtol=1e-10)
    assert oracle.provenance == "ode"


# ---------------------------------------------------------------------------
# fine-grid self-reference


def _make_trajectory(h):
    model = builtin_system("burgers_inhom", {})
    grid = StaggeredGrid(h=h, lambda_cfl=2.0, x_min=-3.0, x_max=3.0)
    return run(model, grid, SamplingSequence(), riemann_data([1.0], [0.0]),
               0.5, max_strength=1.5)


def test_fine_grid_requires_genuine_refinement():
    with pytest.raises(IntegrationFailure):
        fine_grid_reference(_make_trajectory, h=0.1, h_ref=0.05)


def test_fine_grid_trivial_self_comparison():
    traj = _make_trajectory(0.1)
    oracle = fine_grid_reference(_make_trajectory, h=0.1, h_ref=0.1)
    xs = np.linspace(-2.0, 2.0, 11)
    np.testing.assert_array_equal(oracle(xs, 0.4), traj.evaluate(0.4, xs))
    assert oracle.provenance == "fine_grid"


def test_fine_grid_window_comes_from_the_run():
    oracle = fine_grid_reference(_make_trajectory, h=0.2, h_ref=0.025)
    with pytest.raises(IntegrationFailure):
        oracle(0.0, 0.6)              # past t_final of the reference run
    with pytest.raises(IntegrationFailure):
        oracle(4.0, 0.2)              # outside the spatial domain
    assert oracle(0.0, 0.2).shape == (1,)


def test_oracle_solution_scalar_versus_array_shapes():
    sol = OracleSolution(lambda x, t: np.array([x + t, x - t]),
                         (0.0, 1.0), (-1.0, 1.0), "closed_form")
    assert sol(0.25, 0.5).shape == (2,)
    assert sol(np.array([0.0, 0.5]), 0.5).shape == (2, 2)
    with pytest.raises(IntegrationFailure):
        sol(0.0, 2.0)
    with pytest.raises(IntegrationFailure):
        sol(-1.5, 0.5)
