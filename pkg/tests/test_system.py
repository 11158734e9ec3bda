import numpy as np
import pytest

from glimmrcm.errors import (InvalidParams, NonHyperbolic, UnknownSystem,
                             ValidationError)
from glimmrcm.system import (DomainBall, audit_assumptions, builtin_system,
                             default_plan, eigen_decompose, make_profile,
                             theta)

RNG_SEED = 2026


def _sech2(x):
    e = np.exp(-np.abs(x))
    s = 2.0 * e / (1.0 + e * e)
    return s * s


def _profile(A=10.0, omega=0.3, amp=None):
    amp = 0.45 * omega if amp is None else amp
    return make_profile(A_const=A, omega=omega,
                        phi=lambda x: amp * _sech2(x),
                        psi=lambda t: np.exp(-t))


# ---------------------------------------------------------------------------
# registry


def test_builtin_names():
    for name in ("burgers_inhom", "advection_var", "p_system"):
        model = builtin_system(name, {})
        assert model.name == name


def test_unknown_system_rejected():
    with pytest.raises(UnknownSystem):
        builtin_system("euler", {})


def test_invalid_params_rejected():
    with pytest.raises(InvalidParams):
        builtin_system("burgers_inhom", {"a_inf": -1.0})
    with pytest.raises(InvalidParams):
        builtin_system("burgers_inhom", {"bogus": 1.0})
    with pytest.raises(InvalidParams):
        builtin_system("p_system", {"gamma": 1.0})
    with pytest.raises(InvalidParams):
        builtin_system("p_system", {"kappa": -0.1})
    with pytest.raises(InvalidParams):
        builtin_system("advection_var", {"kappa": 0.05})


def test_user_defined_requires_core_fields():
    with pytest.raises(InvalidParams):
        builtin_system("user_defined", {"n": 1, "flux": lambda U, x, t: U})


def test_user_defined_roundtrip():
    model = builtin_system("user_defined", {
        "n": 1,
        "flux": lambda U, x, t: np.asarray(U),
        "source": lambda U, x, t: np.asarray(U),
        "field_kinds": ("ld",),
        "flux_is_autonomous": True,
    })
    assert model.n == 1
    np.testing.assert_allclose(model.jacobian(np.array([2.0]), 0.0, 0.0),
                               [[1.0]], atol=1e-7)


# ---------------------------------------------------------------------------
# derivative closures vs finite differences


def test_burgers_derivatives_match_fd():
    model = builtin_system("burgers_inhom",
                           {"a_inf": 1.0, "eps": 0.2, "kappa": 0.1})
    rng = np.random.Generator(np.random.Philox(key=RNG_SEED))
    for _ in range(50):
        u = rng.uniform(0.5, 1.5)
        x = rng.uniform(-3.0, 3.0)
        t = rng.uniform(0.0, 2.0)
        U = np.array([u])
        d = 1e-6
        fd_jac = (model.flux(np.array([u + d]), x, t)
                  - model.flux(np.array([u - d]), x, t)) / (2 * d)
        np.testing.assert_allclose(model.jacobian(U, x, t)[0, 0],
                                   fd_jac[0], rtol=1e-8, atol=1e-8)
        fd_fx = (model.flux(U, x + d, t) - model.flux(U, x - d, t)) / (2 * d)
        np.testing.assert_allclose(model.dflux_dx(U, x, t)[0], fd_fx[0],
                                   rtol=1e-7, atol=1e-8)


def test_psystem_jacobian_matches_fd():
    model = builtin_system("p_system", {"gamma": 1.4})
    rng = np.random.Generator(np.random.Philox(key=RNG_SEED + 1))
    for _ in range(30):
        U = np.array([rng.uniform(0.5, 2.0), rng.uniform(-0.5, 0.5)])
        J = model.jacobian(U, 0.0, 0.0)
        d = 1e-6
        for k in range(2):
            dU = np.zeros(2)
            dU[k] = d
            col = (np.asarray(model.flux(U + dU, 0, 0))
                   - np.asarray(model.flux(U - dU, 0, 0))) / (2 * d)
            np.testing.assert_allclose(J[:, k], col, rtol=1e-6, atol=1e-7)


def test_autonomous_flux_has_zero_x_derivative():
    model = builtin_system("p_system", {})
    np.testing.assert_array_equal(
        model.dflux_dx(np.array([1.0, 0.0]), 1.7, 0.3), np.zeros(2))


# ---------------------------------------------------------------------------
# eigenstructure


def test_eigen_decompose_biorthonormal():
    rng = np.random.Generator(np.random.Philox(key=RNG_SEED + 2))
    model = builtin_system("p_system", {"gamma": 2.0})
    for _ in range(40):
        U = np.array([rng.uniform(0.4, 2.5), rng.uniform(-1.0, 1.0)])
        eig = eigen_decompose(model, U, 0.0, 0.0)
        assert eig.lambdas[0] < eig.lambdas[1]
        np.testing.assert_allclose(eig.left @ eig.right, np.eye(2),
                                   atol=1e-10)
        J = model.jacobian(U, 0.0, 0.0)
        for i in range(2):
            r = eig.right_vector(i)
            np.testing.assert_allclose(J @ r, eig.lambdas[i] * r, atol=1e-9)


def test_psystem_degenerate_state_rejected():
    model = builtin_system("p_system", {})
    with pytest.raises(NonHyperbolic):
        eigen_decompose(model, np.array([-0.2, 0.0]), 0.0, 0.0)


def test_scalar_orientation_points_uphill():
    # genuinely nonlinear scalar field: eigenvector oriented along +u
    model = builtin_system("burgers_inhom", {"eps": 0.1})
    eig = eigen_decompose(model, np.array([1.0]), 0.2, 0.0)
    assert eig.right_vector(0)[0] > 0.0


# ---------------------------------------------------------------------------
# first-order initializer direction


def test_theta_solves_linearized_flux_equation():
    model = builtin_system("burgers_inhom", {"eps": 0.2})
    U = np.array([1.1])
    x, t = 0.7, 0.4
    th = theta(model, U, x, t)
    expected = model.dflux_dx(U, x, t) / model.jacobian(U, x, t)[0, 0]
    np.testing.assert_allclose(th, expected, rtol=1e-12)


def test_theta_zero_for_autonomous_flux():
    model = builtin_system("p_system", {})
    np.testing.assert_array_equal(theta(model, np.array([1.0, 0.1]), 0, 0),
                                  np.zeros(2))


# ---------------------------------------------------------------------------
# domain ball


def test_ball_contains_and_shrink():
    ball = DomainBall(np.array([1.0]), 0.5)
    assert ball.contains(np.array([1.4]))
    assert not ball.contains(np.array([1.6]))
    assert ball.contains(np.array([1.5000001]), slack=1e-3)
    half = ball.shrink(0.5)
    assert half.radius == 0.25
    with pytest.raises(ValidationError):
        DomainBall(np.array([0.0]), -1.0)


# ---------------------------------------------------------------------------
# profiles and the hypothesis audit


def test_profile_budget_enforced():
    with pytest.raises(ValidationError):
        make_profile(A_const=10.0, omega=0.1,
                     phi=lambda x: 0.2 * _sech2(x),      # integral 0.4
                     psi=lambda t: np.exp(-t))
    with pytest.raises(ValidationError):
        make_profile(A_const=10.0, omega=0.3,
                     phi=lambda x: 0.1 * _sech2(x),
                     psi=lambda t: np.exp(-t), psi_l1=2.0)
    with pytest.raises(ValidationError):
        _profile(A=-1.0)


def test_audit_passes_inside_small_ball():
    model = builtin_system("burgers_inhom",
                           {"a_inf": 1.0, "eps": 0.05, "kappa": 0.05})
    report = audit_assumptions(model, _profile(), DomainBall(np.array([1.0]), 0.25))
    assert report.passed
    assert len(report.checks) == 7
    for check in report.checks:
        assert check.margin > 0.0, check.key


def test_audit_flags_resonant_ball():
    model = builtin_system("burgers_inhom",
                           {"a_inf": 1.0, "eps": 0.05, "kappa": 0.05})
    report = audit_assumptions(model, _profile(), DomainBall(np.array([0.0]), 0.25))
    assert not report.passed
    assert not report.check("nonresonance").passed


def test_audit_flags_tight_envelope():
    # same system, wider ball: the spatial envelope budget no longer covers
    # the flux inhomogeneity and the audit must say so
    model = builtin_system("burgers_inhom",
                           {"a_inf": 1.0, "eps": 0.05, "kappa": 0.05})
    report = audit_assumptions(model, _profile(), DomainBall(np.array([1.0]), 0.5))
    assert not report.check("space_time_envelope").passed


def test_audit_report_serializes():
    model = builtin_system("advection_var", {"eps": 0.05})
    report = audit_assumptions(model, _profile(),
                               DomainBall(np.array([1.0]), 0.3))
    for check in report.checks:
        d = check.to_dict()
        assert {"key", "margin", "passed", "worst", "threshold"} <= set(d)


def test_default_plan_stays_inside_ball():
    ball = DomainBall(np.array([1.0, 0.0]), 0.4)
    plan = default_plan(ball)
    for U in plan.states:
        assert ball.contains(U, slack=1e-12)
