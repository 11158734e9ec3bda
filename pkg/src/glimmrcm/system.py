"""System descriptions for 1-D balance laws  u_t + F(u, x, t)_x + G(u, x, t) = 0.

A ``SystemModel`` bundles the flux, the source, their derivatives (analytic
when available, finite differences otherwise) and the field types of the
characteristic families.  ``eigen_decompose`` produces the ordered, oriented
eigenstructure of the flux Jacobian; ``theta`` solves  dF/dU * theta = F_x,
the first-order correction used by the flux-level step of the scheme.

``audit_assumptions`` samples a state ball and space-time windows and
reports, with margins, whether the structural hypotheses behind the BV
theory hold there: uniform strict hyperbolicity, nonresonance, derivative
bounds, and the decay envelopes on the inhomogeneous terms.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import InvalidParams, NonHyperbolic, SingularJacobian, UnknownSystem, ValidationError

Array = np.ndarray

GNL = "gnl"
LD = "ld"

FD_STEP = 1e-6          # base finite-difference step, scaled by 1 + |argument|
EIG_TOL = 1e-10         # relative tolerance for real/distinct eigenvalue checks


def _sech2(x):
    """Numerically stable sech(x)**2."""
    e = np.exp(-np.abs(x))
    s = 2.0 * e / (1.0 + e * e)
    return s * s


# ---------------------------------------------------------------------------
# model container


@dataclass(frozen=True)
class SystemModel:
    """Balance-law description.

    ``flux`` and ``source`` map (U, x, t) -> array; they must accept state
    arrays of shape (n,) and may additionally broadcast over a leading axis
    (the builtins do).  Derivative callables are optional; omitted ones fall
    back to central differences with step FD_STEP * (1 + |arg|).

    ``field_kinds[i]`` is "gnl" or "ld" and fixes the orientation rule for
    the i-th right eigenvector: genuinely nonlinear fields point uphill in
    their eigenvalue, linearly degenerate fields make the first nonzero
    component positive.
    """

    name: str
    n: int
    flux: Callable
    source: Callable
    field_kinds: tuple
    flux_jacobian: Optional[Callable] = None
    flux_x: Optional[Callable] = None
    eigen: Optional[Callable] = None        # (U, x, t) -> (lam, R, L), presorted/oriented
    eigenvalue: Optional[Callable] = None   # (family, U, x, t) -> float
    right_vector: Optional[Callable] = None  # (family, U, x, t) -> unit, oriented
    flux_is_autonomous: bool = False
    source_is_zero: bool = False
    params: dict = field(default_factory=dict)
    coeffs: dict = field(default_factory=dict, repr=False)  # scalar coefficient closures

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParams("system size must be >= 1")
        if len(self.field_kinds) != self.n:
            raise InvalidParams("field_kinds must have one entry per family")
        if any(k not in (GNL, LD) for k in self.field_kinds):
            raise InvalidParams(f"field kinds must be '{GNL}' or '{LD}'")

    # -- derivatives with finite-difference fallbacks ----------------------

    def jacobian(self, U, x, t) -> Array:
        """dF/dU at (U, x, t), shape (n, n)."""
        if self.flux_jacobian is not None:
            return np.asarray(self.flux_jacobian(U, x, t), dtype=float)
        return self._fd_jacobian(U, x, t)

    def _fd_jacobian(self, U, x, t) -> Array:
        U = np.asarray(U, dtype=float)
        step = FD_STEP * (1.0 + float(np.max(np.abs(U))))
        J = np.empty((self.n, self.n))
        for k in range(self.n):
            dU = np.zeros(self.n)
            dU[k] = step
            J[:, k] = (np.asarray(self.flux(U + dU, x, t), dtype=float)
                       - np.asarray(self.flux(U - dU, x, t), dtype=float)) / (2.0 * step)
        return J

    def dflux_dx(self, U, x, t) -> Array:
        """Partial of the flux in x at frozen U, shape (n,)."""
        if self.flux_is_autonomous:
            return np.zeros(self.n)
        if self.flux_x is not None:
            return np.asarray(self.flux_x(U, x, t), dtype=float)
        step = FD_STEP * (1.0 + abs(x))
        return (np.asarray(self.flux(U, x + step, t), dtype=float)
                - np.asarray(self.flux(U, x - step, t), dtype=float)) / (2.0 * step)


@dataclass(frozen=True)
class EigenStructure:
    """Sorted eigenvalues with biorthonormal right/left eigenvectors.

    ``right[:, i]`` is the unit right eigenvector of family i, ``left[i, :]``
    the matching left row, normalized so that left @ right = I.
    """

    lambdas: Array
    right: Array
    left: Array

    def right_vector(self, i) -> Array:
        return self.right[:, i]

    def left_vector(self, i) -> Array:
        return self.left[i, :]


def eigen_decompose(model: SystemModel, U, x, t) -> EigenStructure:
    """Oriented eigenstructure of dF/dU at (U, x, t).

    Raises NonHyperbolic when eigenvalues are complex or coincide to
    relative tolerance EIG_TOL.
    """
    if model.eigen is not None:
        lam, R, L = model.eigen(U, x, t)
        return EigenStructure(np.asarray(lam, dtype=float),
                              np.asarray(R, dtype=float),
                              np.asarray(L, dtype=float))
    A = model.jacobian(U, x, t)
    return _eigen_from_matrix(model, A, U, x, t)


def _eigen_from_matrix(model, A, U, x, t) -> EigenStructure:
    w, V = np.linalg.eig(A)
    scale = max(1.0, float(np.max(np.abs(w))))
    if np.max(np.abs(w.imag)) > EIG_TOL * scale:
        raise NonHyperbolic(f"complex eigenvalues at U={U}, x={x}, t={t}")
    lam = w.real.copy()
    order = np.argsort(lam)
    lam = lam[order]
    R = V.real[:, order]
    if model.n > 1 and np.min(np.diff(lam)) <= EIG_TOL * scale:
        raise NonHyperbolic(f"coincident eigenvalues at U={U}, x={x}, t={t}")
    R = R / np.linalg.norm(R, axis=0)
    U = np.asarray(U, dtype=float)
    step = FD_STEP * (1.0 + float(np.max(np.abs(U))))
    for i in range(model.n):
        r = R[:, i]
        if model.field_kinds[i] == GNL:
            # Orient uphill: d lambda_i / d tau > 0 along the field.
            lp = _sorted_eigenvalues(model, U + step * r, x, t)[i]
            lm = _sorted_eigenvalues(model, U - step * r, x, t)[i]
            if lp - lm < 0.0:
                R[:, i] = -r
        else:
            nz = np.flatnonzero(np.abs(r) > 1e-12)
            if nz.size and r[nz[0]] < 0.0:
                R[:, i] = -r
    try:
        L = np.linalg.inv(R)
    except np.linalg.LinAlgError as exc:
        raise NonHyperbolic(f"eigenvector matrix singular at U={U}") from exc
    return EigenStructure(lam, R, L)


def _sorted_eigenvalues(model, U, x, t) -> Array:
    w = np.linalg.eigvals(model.jacobian(U, x, t))
    return np.sort(w.real)


def theta(model: SystemModel, U, x, t) -> Array:
    """Solve  dF/dU(U, x, t) theta = F_x(U, x, t).

    This is the first-order state shift the flux-level equations apply per
    mesh width.  Zero (exactly) for autonomous fluxes.
    """
    if model.flux_is_autonomous:
        return np.zeros(model.n)
    A = model.jacobian(U, x, t)
    b = model.dflux_dx(U, x, t)
    try:
        th = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularJacobian(f"flux Jacobian singular at U={U}, x={x}, t={t}") from exc
    if np.max(np.abs(A @ th - b)) > 1e-10 * (1.0 + np.max(np.abs(b))):
        raise SingularJacobian(f"ill-conditioned flux Jacobian at U={U}, x={x}, t={t}")
    return th


# ---------------------------------------------------------------------------
# builtin systems


def builtin_system(name: str, params: Optional[dict] = None) -> SystemModel:
    """Construct a builtin model by name.

    Available: ``burgers_inhom`` (scalar, genuinely nonlinear, flux
    a(x,t) u^2/2 and source kappa e^-t u), ``advection_var`` (scalar contact
    field, flux a(x,t) u), ``p_system`` (gamma-law, two genuinely nonlinear
    fields, optional decaying source), ``user_defined`` (callables supplied
    through params).  The coefficient a(x,t) = a_inf + eps e^-t sech^2(x).
    """
    params = dict(params or {})
    if name == "burgers_inhom":
        return _scalar_coefficient_system(name, params, convex=True)
    if name == "advection_var":
        params.setdefault("kappa", 0.0)
        if params["kappa"] != 0.0:
            raise InvalidParams("advection_var has no source term")
        return _scalar_coefficient_system(name, params, convex=False)
    if name == "p_system":
        return _p_system(params)
    if name == "user_defined":
        return _user_defined(params)
    raise UnknownSystem(f"no builtin system named {name!r}")


def _coefficient(a_inf, eps):
    def a(x, t):
        return a_inf + eps * np.exp(-t) * _sech2(x)

    def a_x(x, t):
        return eps * np.exp(-t) * (-2.0) * _sech2(x) * np.tanh(x)

    def a_t(x, t):
        return -eps * np.exp(-t) * _sech2(x)

    return a, a_x, a_t


def _scalar_coefficient_system(name, params, convex):
    defaults = {"a_inf": 1.0, "eps": 0.0, "kappa": 0.0}
    unknown = set(params) - set(defaults)
    if unknown:
        raise InvalidParams(f"{name}: unknown parameters {sorted(unknown)}")
    p = {**defaults, **params}
    a_inf, eps, kappa = float(p["a_inf"]), float(p["eps"]), float(p["kappa"])
    if a_inf <= 0.0:
        raise InvalidParams(f"{name}: a_inf must be positive")
    if a_inf - max(-eps, 0.0) <= 0.0:
        raise InvalidParams(f"{name}: coefficient a(x,t) must stay positive")
    if kappa < 0.0:
        raise InvalidParams(f"{name}: kappa must be nonnegative")
    a, a_x, a_t = _coefficient(a_inf, eps)

    if convex:
        def flux(U, x, t):
            u = np.asarray(U)[..., 0]
            return np.stack([0.5 * a(x, t) * u * u], axis=-1)

        def flux_jacobian(U, x, t):
            return np.array([[a(x, t) * float(np.asarray(U)[0])]])

        def flux_x(U, x, t):
            u = float(np.asarray(U)[0])
            return np.array([0.5 * a_x(x, t) * u * u])

        def lam_fn(i, U, x, t):
            return a(x, t) * float(np.asarray(U)[0])

        kinds = (GNL,)
    else:
        def flux(U, x, t):
            u = np.asarray(U)[..., 0]
            return np.stack([a(x, t) * u], axis=-1)

        def flux_jacobian(U, x, t):
            return np.array([[a(x, t)]])

        def flux_x(U, x, t):
            return np.array([a_x(x, t) * float(np.asarray(U)[0])])

        def lam_fn(i, U, x, t):
            return a(x, t)

        kinds = (LD,)

    def source(U, x, t):
        u = np.asarray(U)[..., 0]
        return np.stack([kappa * np.exp(-t) * u], axis=-1)

    def eigen(U, x, t):
        r = 1.0 if a(x, t) > 0.0 else -1.0
        return (np.array([lam_fn(0, U, x, t)]), np.array([[r]]), np.array([[r]]))

    def right_vector(i, U, x, t):
        return np.array([1.0 if a(x, t) > 0.0 else -1.0])

    return SystemModel(
        name=name, n=1, flux=flux, source=source, field_kinds=kinds,
        flux_jacobian=flux_jacobian, flux_x=flux_x, eigen=eigen,
        eigenvalue=lam_fn, right_vector=right_vector,
        flux_is_autonomous=(eps == 0.0), source_is_zero=(kappa == 0.0),
        params={"a_inf": a_inf, "eps": eps, "kappa": kappa},
        coeffs={"a": a, "a_x": a_x, "a_t": a_t,
                "g": (lambda t: kappa * np.exp(-t))},
    )


def _p_system(params):
    defaults = {"gamma": 2.0, "kappa": 0.0}
    unknown = set(params) - set(defaults)
    if unknown:
        raise InvalidParams(f"p_system: unknown parameters {sorted(unknown)}")
    p = {**defaults, **params}
    gamma, kappa = float(p["gamma"]), float(p["kappa"])
    if gamma <= 1.0:
        raise InvalidParams("p_system: gamma must exceed 1")
    if kappa < 0.0:
        raise InvalidParams("p_system: kappa must be nonnegative")

    def _check_v(v):
        if np.any(np.asarray(v) <= 0.0):
            raise NonHyperbolic("p_system: specific volume must stay positive")

    def flux(U, x, t):
        U = np.asarray(U)
        v, u = U[..., 0], U[..., 1]
        _check_v(v)
        return np.stack([-u, v ** (-gamma)], axis=-1)

    def flux_jacobian(U, x, t):
        v = float(np.asarray(U)[0])
        _check_v(v)
        return np.array([[0.0, -1.0], [-gamma * v ** (-gamma - 1.0), 0.0]])

    def source(U, x, t):
        U = np.asarray(U)
        return kappa * np.exp(-t) * U

    def _speed(v):
        # c(v) = sqrt(-p'(v)) = sqrt(gamma) v^{-(gamma+1)/2}
        return math.sqrt(gamma) * v ** (-(gamma + 1.0) / 2.0)

    def eigen(U, x, t):
        v = float(np.asarray(U)[0])
        _check_v(v)
        c = _speed(v)
        s = 1.0 / math.sqrt(1.0 + c * c)
        lam = np.array([-c, c])
        R = np.array([[s, -s], [c * s, c * s]])
        m = math.sqrt(1.0 + c * c) / (2.0 * c)
        L = np.array([[m * c, m], [-m * c, m]])
        return lam, R, L

    def lam_fn(i, U, x, t):
        v = float(np.asarray(U)[0])
        _check_v(v)
        c = _speed(v)
        return -c if i == 0 else c

    def right_vector(i, U, x, t):
        v = float(np.asarray(U)[0])
        _check_v(v)
        c = _speed(v)
        s = 1.0 / math.sqrt(1.0 + c * c)
        return np.array([s, c * s]) if i == 0 else np.array([-s, c * s])

    coeffs = {"sound_speed": _speed}
    from . import kernels
    if kernels.use_numba():
        from .kernels import psystem
        coeffs["_curve_kernels"] = psystem.make_curve_kernels(gamma)

    return SystemModel(
        name="p_system", n=2, flux=flux, source=source, field_kinds=(GNL, GNL),
        flux_jacobian=flux_jacobian, flux_x=None, eigen=eigen,
        eigenvalue=lam_fn, right_vector=right_vector,
        flux_is_autonomous=True, source_is_zero=(kappa == 0.0),
        params={"gamma": gamma, "kappa": kappa},
        coeffs=coeffs,
    )


def _user_defined(params):
    required = {"n", "flux", "source", "field_kinds"}
    missing = required - set(params)
    if missing:
        raise InvalidParams(f"user_defined: missing parameters {sorted(missing)}")
    return SystemModel(
        name=params.get("label", "user_defined"),
        n=int(params["n"]),
        flux=params["flux"],
        source=params["source"],
        field_kinds=tuple(params["field_kinds"]),
        flux_jacobian=params.get("flux_jacobian"),
        flux_x=params.get("flux_x"),
        eigen=params.get("eigen"),
        eigenvalue=params.get("eigenvalue"),
        right_vector=params.get("right_vector"),
        flux_is_autonomous=bool(params.get("flux_is_autonomous", False)),
        source_is_zero=bool(params.get("source_is_zero", False)),
        params={k: v for k, v in params.items() if isinstance(v, (int, float, str, bool))},
    )


# ---------------------------------------------------------------------------
# state ball and structural-hypothesis audit


@dataclass(frozen=True)
class DomainBall:
    """Euclidean ball in state space inside which the theory is invoked."""

    center: Array
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0.0:
            raise ValidationError("ball radius must be positive")

    def contains(self, U, slack: float = 0.0) -> bool:
        return float(np.linalg.norm(np.asarray(U) - self.center)) <= self.radius + slack

    def shrink(self, factor: float) -> "DomainBall":
        return DomainBall(self.center, self.radius * factor)


@dataclass(frozen=True)
class AssumptionProfile:
    """Constants and decay envelopes the hypotheses are audited against.

    ``A_const`` bounds derivatives and 1/A_const is the eigenvalue gap and
    nonresonance floor; ``phi`` is the integrable spatial envelope with
    integral at most ``omega``; ``psi`` is the temporal decay factor with
    L1 norm ``psi_l1``.
    """

    A_const: float
    omega: float
    phi: Callable
    psi: Callable
    psi_l1: float
    phi_integral: float
    phi_name: str = "phi"
    psi_name: str = "psi"


def make_profile(A_const, omega, phi, psi, *, psi_l1=None,
                 phi_name="phi", psi_name="psi") -> AssumptionProfile:
    """Build a profile, checking the declared budgets by quadrature.

    The integral of phi must not exceed omega (relative slack 1e-6); a
    declared psi_l1 must match quadrature to 1e-6 relative.
    """
    if A_const <= 0.0 or omega <= 0.0:
        raise ValidationError("A_const and omega must be positive")
    phi_integral, _ = quad(phi, -np.inf, np.inf, limit=200)
    if phi_integral > omega * (1.0 + 1e-6):
        raise ValidationError(
            f"integral of phi = {phi_integral:.6g} exceeds omega = {omega:.6g}")
    psi_quad, _ = quad(psi, 0.0, np.inf, limit=200)
    if psi_l1 is None:
        psi_l1 = psi_quad
    elif abs(psi_l1 - psi_quad) > 1e-6 * max(1.0, abs(psi_l1)):
        raise ValidationError(
            f"declared psi_l1 = {psi_l1:.8g} differs from quadrature {psi_quad:.8g}")
    return AssumptionProfile(float(A_const), float(omega), phi, psi,
                             float(psi_l1), float(phi_integral),
                             phi_name, psi_name)


@dataclass(frozen=True)
class SamplingPlan:
    """Where the audit evaluates the hypotheses."""

    states: Array        # (m, n) sample states inside the ball
    x_grid: Array
    t_grid: Array


def default_plan(ball: DomainBall, *, n_states=17, x_span=(-20.0, 20.0), nx=41,
                 t_span=(0.0, 12.0), nt=25, seed=0) -> SamplingPlan:
    """Deterministic sample grid: radial rays in the ball times x/t windows."""
    c = ball.center
    n = c.size
    if n == 1:
        radii = np.linspace(-ball.radius, ball.radius, n_states)
        states = c[None, :] + radii[:, None]
    else:
        rng = np.random.Generator(np.random.Philox(key=seed))
        dirs = rng.normal(size=(n_states, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = np.linspace(0.0, ball.radius, n_states)
        states = c[None, :] + radii[:, None] * dirs
    return SamplingPlan(states, np.linspace(*x_span, nx), np.linspace(*t_span, nt))


@dataclass
class HypothesisCheck:
    key: str
    description: str
    margin: float
    passed: bool
    worst: dict
    threshold: str

    def to_dict(self):
        return {"key": self.key, "description": self.description,
                "margin": self.margin, "passed": self.passed,
                "threshold": self.threshold, "worst": self.worst}


@dataclass
class AuditReport:
    checks: list
    model_name: str
    ball_center: list
    ball_radius: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, key) -> HypothesisCheck:
        for c in self.checks:
            if c.key == key:
                return c
        raise KeyError(key)

    def to_dict(self):
        return {"model": self.model_name, "ball_center": self.ball_center,
                "ball_radius": self.ball_radius, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks]}

    def format_table(self) -> str:
        lines = [f"hypothesis audit: {self.model_name} "
                 f"(ball center {self.ball_center}, radius {self.ball_radius})"]
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"  [{status}] {c.key:<24s} margin={c.margin:.6g}  ({c.description})")
        lines.append(f"  overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _max_abs(a) -> float:
    return float(np.max(np.abs(a)))


def _fd_in_state(fn, U, x, t, n_out):
    """Max-abs of the U-derivative of fn (central differences), plus raw rows."""
    n = U.size
    step = FD_STEP * (1.0 + float(np.max(np.abs(U))))
    out = np.empty((n_out, n))
    for k in range(n):
        dU = np.zeros(n)
        dU[k] = step
        out[:, k] = (np.asarray(fn(U + dU, x, t), dtype=float)
                     - np.asarray(fn(U - dU, x, t), dtype=float)) / (2.0 * step)
    return out


def _fd_in_x(fn, U, x, t):
    step = FD_STEP * (1.0 + abs(x))
    return (np.asarray(fn(U, x + step, t), dtype=float)
            - np.asarray(fn(U, x - step, t), dtype=float)) / (2.0 * step)


def _fd_in_t(fn, U, x, t):
    step = FD_STEP * (1.0 + abs(t))
    tm = max(t - step, 0.0)
    return (np.asarray(fn(U, x, t + step), dtype=float)
            - np.asarray(fn(U, x, tm), dtype=float)) / (t + step - tm)


def audit_assumptions(model: SystemModel, profile: AssumptionProfile,
                      ball: DomainBall, plan: Optional[SamplingPlan] = None) -> AuditReport:
    """Sample the structural hypotheses over the ball and report margins.

    Failures are reported, never raised: callers inspect ``report.passed``.
    Envelope checks whose left-hand side vanishes identically (homogeneous
    data) pass with infinite margin.
    """
    if plan is None:
        plan = default_plan(ball)
    A = profile.A_const
    floor = 1.0 / A

    sep_worst, sep_margin = {}, np.inf
    res_worst, res_margin = {}, np.inf
    bound_worst, bound_max = {}, 0.0
    decay0_worst, decay0_margin = {}, np.inf   # |F_x|, |G| vs omega psi
    decay0_sup = 0.0
    decay1_worst, decay1_margin = {}, np.inf   # |D_U F_x|, |D_U F_t|, |D_U G| vs omega psi
    decay1_sup = 0.0
    env_worst, env_margin = {}, np.inf         # |F_x|, |D_U F_x|, |F_tx|, |G_x| vs phi psi
    env_sup = 0.0

    for U in plan.states:
        U = np.asarray(U, dtype=float)
        for x in plan.x_grid:
            for t in plan.t_grid:
                where = {"U": U.tolist(), "x": float(x), "t": float(t)}
                eig = eigen_decompose(model, U, x, t)
                lam = eig.lambdas
                if model.n > 1:
                    gap = float(np.min(np.diff(lam))) - floor
                    if gap < sep_margin:
                        sep_margin, sep_worst = gap, where
                res = float(np.min(np.abs(lam))) - floor
                if res < res_margin:
                    res_margin, res_worst = res, where

                dUF = model.jacobian(U, x, t)
                d2UF = _fd_in_state(lambda V, xx, tt: model.jacobian(V, xx, tt).ravel(),
                                    U, x, t, model.n * model.n)
                dUG = _fd_in_state(model.source, U, x, t, model.n)
                big = max(_max_abs(dUF), _max_abs(d2UF), _max_abs(dUG))
                if big > bound_max:
                    bound_max, bound_worst = big, where

                psi_t = float(profile.psi(t))
                phi_x = float(profile.phi(x))

                Fx = model.dflux_dx(U, x, t)
                Gv = np.asarray(model.source(U, x, t), dtype=float)
                lhs = max(_max_abs(Fx), _max_abs(Gv))
                decay0_sup = max(decay0_sup, lhs)
                m = profile.omega * psi_t - lhs
                if m < decay0_margin:
                    decay0_margin, decay0_worst = m, where

                dUFx = _fd_in_state(model.dflux_dx, U, x, t, model.n)
                dUFt = _fd_in_t(model.jacobian, U, x, t)
                lhs = max(_max_abs(dUFx), _max_abs(dUFt), _max_abs(dUG))
                decay1_sup = max(decay1_sup, lhs)
                m = profile.omega * psi_t - lhs
                if m < decay1_margin:
                    decay1_margin, decay1_worst = m, where

                Ftx = _fd_in_t(lambda V, xx, tt: model.dflux_dx(V, xx, tt), U, x, t)
                Gx = _fd_in_x(model.source, U, x, t)
                lhs = max(_max_abs(Fx), _max_abs(dUFx), _max_abs(Ftx), _max_abs(Gx))
                env_sup = max(env_sup, lhs)
                m = phi_x * psi_t - lhs
                if m < env_margin:
                    env_margin, env_worst = m, where

    checks = []
    if model.n > 1:
        checks.append(HypothesisCheck(
            "eigenvalue_separation",
            "characteristic speeds keep a uniform gap of at least 1/A",
            sep_margin, sep_margin > 0.0, sep_worst, "min gap - 1/A"))
    else:
        checks.append(HypothesisCheck(
            "eigenvalue_separation",
            "characteristic speeds keep a uniform gap of at least 1/A",
            np.inf, True, {}, "vacuous for scalar systems"))
    checks.append(HypothesisCheck(
        "nonresonance",
        "characteristic speeds stay at least 1/A away from zero",
        res_margin, res_margin > 0.0, res_worst, "min |lambda| - 1/A"))
    checks.append(HypothesisCheck(
        "uniform_derivative_bounds",
        "|dF/dU|, |d2F/dU2|, |dG/dU| bounded by A",
        A - bound_max, A - bound_max > 0.0, bound_worst, "A - sup"))
    phi_margin = profile.omega - profile.phi_integral
    checks.append(HypothesisCheck(
        "phi_integral_budget",
        "integral of the spatial envelope phi stays within omega",
        phi_margin, phi_margin >= 0.0, {}, "omega - integral(phi)"))
    checks.append(_envelope_check(
        "flux_source_time_decay",
        "|F_x| and |G| decay under omega psi(t)",
        decay0_margin, decay0_sup, decay0_worst, "min(omega psi - sup)"))
    checks.append(_envelope_check(
        "derivative_time_decay",
        "|dF_x/dU|, |dF_t/dU| and |dG/dU| decay under omega psi(t)",
        decay1_margin, decay1_sup, decay1_worst, "min(omega psi - sup)"))
    checks.append(_envelope_check(
        "space_time_envelope",
        "|F_x|, |dF_x/dU|, |F_tx|, |G_x| fit under phi(x) psi(t)",
        env_margin, env_sup, env_worst, "min(phi psi - sup)"))
    return AuditReport(checks, model.name,
                       np.asarray(ball.center).tolist(), float(ball.radius))


def _envelope_check(key, description, margin, sup_lhs, worst, threshold):
    # A vanishing left-hand side passes for any envelope.
    if sup_lhs == 0.0:
        return HypothesisCheck(key, description, np.inf, True, {}, threshold)
    return HypothesisCheck(key, description, margin, margin > 0.0, worst, threshold)
