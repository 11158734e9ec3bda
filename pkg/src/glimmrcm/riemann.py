"""Riemann machinery for the frozen-coefficient problems of the scheme.

All solves here freeze the flux at one point (x, t): the Riemann problem
u_t + F(u, x, t)_x = 0 with data (U_L, U_R).  States are connected through
wave-fan curves Phi_i: nonnegative strengths follow the rarefaction curve
(integral curve of the oriented unit eigenvector field, RK4), negative
strengths the shock branch of the Hugoniot locus (Newton continuation with
left-eigenvector projection parametrization).  ``solve_riemann`` inverts the
composite map by a damped Newton iteration in strength space and returns a
``WaveFan``; ``sample_fan`` evaluates the self-similar solution, taking the
left state on sampling ties.

Scalar genuinely nonlinear systems short-circuit to closed forms.  For the
builtin gamma-law system the curve primitives can be served by compiled
kernels (see ``glimmrcm.kernels``); the generic path is the fallback and the
reference they are tested against.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (AdmissibilityError, CurveIntegrationFailure, HugoniotSolveFailure,
                     NewtonDivergence, SmallDataExceeded)
from .system import GNL, LD, SystemModel, eigen_decompose

TOL_NULL = 1e-13        # strengths at or below this carry no wave
NEWTON_TOL = 1e-12      # strength-space Newton residual target (sup norm)
NEWTON_ACCEPT = 1e-10   # residual a solve must reach to be accepted
NEWTON_MAX_ITER = 60
CURVE_TOL = 1e-12       # rarefaction integration error target
CURVE_BASE_SUBSTEPS = 32
CURVE_MAX_SUBSTEPS = 4096
HUGONIOT_TOL = 1e-13
LAX_SLACK = 1e-9        # tolerance on the Lax and ordering inequalities

SHOCK = "shock"
RAREFACTION = "rarefaction"
CONTACT = "contact"
NULL = "null"

DEFAULT_MAX_STRENGTH = 0.5


# ---------------------------------------------------------------------------
# eigenfield access (hooks when the model has them, full decomposition else)


def _right_vector(model, family, U, x, t):
    if model.right_vector is not None:
        return np.asarray(model.right_vector(family, U, x, t), dtype=float)
    return eigen_decompose(model, U, x, t).right_vector(family)


def _eigenvalue(model, family, U, x, t):
    if model.eigenvalue is not None:
        return float(model.eigenvalue(family, U, x, t))
    return float(eigen_decompose(model, U, x, t).lambdas[family])


# ---------------------------------------------------------------------------
# wave curves


def _rk4_integral_curve(model, family, tau, U0, x, t, substeps):
    """RK4 along the oriented unit eigenvector field, fixed substep count."""
    U = np.asarray(U0, dtype=float).copy()
    hstep = tau / substeps
    for _ in range(substeps):
        k1 = _right_vector(model, family, U, x, t)
        k2 = _right_vector(model, family, U + 0.5 * hstep * k1, x, t)
        k3 = _right_vector(model, family, U + 0.5 * hstep * k2, x, t)
        k4 = _right_vector(model, family, U + hstep * k3, x, t)
        U = U + (hstep / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return U


def _kernel_curve(model, kind):
    fast = model.coeffs.get("_curve_kernels")
    return None if fast is None else fast.get(kind)


def _integral_curve(model, family, tau, U0, x, t):
    """Integral-curve point with Richardson-controlled substep refinement."""
    kernel = _kernel_curve(model, "rarefaction")
    run = kernel if kernel is not None else _rk4_integral_curve
    m = CURVE_BASE_SUBSTEPS
    U_prev = run(model, family, tau, U0, x, t, m)
    while m <= CURVE_MAX_SUBSTEPS:
        U_next = run(model, family, tau, U0, x, t, 2 * m)
        err = float(np.max(np.abs(U_next - U_prev))) / 15.0
        if err <= CURVE_TOL:
            return U_next
        U_prev = U_next
        m *= 2
    raise CurveIntegrationFailure(
        f"family {family} curve at strength {tau} missed {CURVE_TOL} "
        f"with {CURVE_MAX_SUBSTEPS} substeps")


def _hugoniot_newton(model, family, tau, U0, x, t):
    """Shock-branch point and speed via Newton continuation from strength 0.

    Parametrized by the left-eigenvector projection at the base state:
    l_i(U0) . (U - U0) = tau, so the branch meets the rarefaction curve C1
    at tau = 0.
    """
    kernel = _kernel_curve(model, "hugoniot")
    if kernel is not None:
        return kernel(model, family, tau, U0, x, t)
    U0 = np.asarray(U0, dtype=float)
    n = U0.size
    F0 = np.asarray(model.flux(U0, x, t), dtype=float)
    ell = eigen_decompose(model, U0, x, t).left_vector(family)
    scale = 1.0 + float(np.max(np.abs(F0)))

    n_cont = max(1, int(math.ceil(abs(tau) / 0.1)))
    U = U0.copy()
    s = _eigenvalue(model, family, U0, x, t)
    r0 = _right_vector(model, family, U0, x, t)
    for k in range(1, n_cont + 1):
        tau_k = tau * (k / n_cont)
        dtau = tau * (1.0 / n_cont)
        U = U + dtau * (r0 if k == 1 else _right_vector(model, family, U, x, t))
        for it in range(40):
            dU = U - U0
            res = np.empty(n + 1)
            res[:n] = np.asarray(model.flux(U, x, t), dtype=float) - F0 - s * dU
            res[n] = ell @ dU - tau_k
            rnorm = float(np.max(np.abs(res)))
            if rnorm <= HUGONIOT_TOL * scale:
                break
            J = np.empty((n + 1, n + 1))
            J[:n, :n] = model.jacobian(U, x, t) - s * np.eye(n)
            J[:n, n] = -dU
            J[n, :n] = ell
            J[n, n] = 0.0
            try:
                step = np.linalg.solve(J, -res)
            except np.linalg.LinAlgError as exc:
                raise HugoniotSolveFailure(
                    f"singular continuation system, family {family}") from exc
            alpha = 1.0
            for _ in range(25):
                U_try = U + alpha * step[:n]
                s_try = s + alpha * step[n]
                dU_try = U_try - U0
                r_try = np.empty(n + 1)
                r_try[:n] = (np.asarray(model.flux(U_try, x, t), dtype=float)
                             - F0 - s_try * dU_try)
                r_try[n] = ell @ dU_try - tau_k
                if float(np.max(np.abs(r_try))) < rnorm:
                    break
                alpha *= 0.5
            U = U + alpha * step[:n]
            s = s + alpha * step[n]
        else:
            raise HugoniotSolveFailure(
                f"no convergence at strength {tau_k} of family {family}")
    return U, float(s)


def wave_curve(model: SystemModel, family: int, tau: float, U0, x: float, t: float):
    """State reached from U0 by an i-wave of signed strength tau.

    Genuinely nonlinear families: tau >= 0 follows the rarefaction curve,
    tau < 0 the admissible shock branch.  Linearly degenerate families
    follow the integral curve for either sign.  Frozen coefficients (x, t).
    """
    U1, _, _, _ = _wave_point(model, family, tau, U0, x, t)
    return U1


def _wave_point(model, family, tau, U0, x, t):
    """Curve point plus wave metadata: (U1, kind, speed_lo, speed_hi)."""
    U0 = np.asarray(U0, dtype=float)
    if abs(tau) <= TOL_NULL:
        return U0.copy(), NULL, math.nan, math.nan
    if model.n == 1:
        return _scalar_wave_point(model, tau, U0, x, t)
    if model.field_kinds[family] == LD:
        U1 = _integral_curve(model, family, tau, U0, x, t)
        s = _eigenvalue(model, family, U0, x, t)
        return U1, CONTACT, s, s
    if tau > 0.0:
        U1 = _integral_curve(model, family, tau, U0, x, t)
        lo = _eigenvalue(model, family, U0, x, t)
        hi = _eigenvalue(model, family, U1, x, t)
        return U1, RAREFACTION, lo, hi
    U1, s = _hugoniot_newton(model, family, tau, U0, x, t)
    return U1, SHOCK, s, s


def _scalar_orientation(model, U, x, t):
    """Sign of the oriented scalar eigenvector (+1 or -1)."""
    if model.right_vector is not None:
        return float(model.right_vector(0, U, x, t)[0])
    return float(eigen_decompose(model, U, x, t).right[0, 0])


def _scalar_wave_point(model, tau, U0, x, t):
    """Closed forms for scalar fields: the curve is the u-axis itself."""
    r = _scalar_orientation(model, U0, x, t)
    U1 = U0 + tau * np.array([r])
    if model.field_kinds[0] == LD:
        s = _eigenvalue(model, 0, U0, x, t)
        return U1, CONTACT, s, s
    if tau > 0.0:
        lo = _eigenvalue(model, 0, U0, x, t)
        hi = _eigenvalue(model, 0, U1, x, t)
        return U1, RAREFACTION, lo, hi
    lam0 = _eigenvalue(model, 0, U0, x, t)
    lam1 = _eigenvalue(model, 0, U1, x, t)
    du = float(U1[0] - U0[0])
    if abs(du) < 1e-6 * (1.0 + abs(float(U0[0]))):
        # The secant slope loses ~eps/|du| digits to cancellation; for
        # micro-shocks the characteristic midpoint is accurate to O(du^2).
        s = 0.5 * (lam0 + lam1)
    else:
        f0 = float(np.asarray(model.flux(U0, x, t))[0])
        f1 = float(np.asarray(model.flux(U1, x, t))[0])
        s = (f1 - f0) / du
        # Genuine nonlinearity puts the true speed strictly between the edge
        # characteristics; clamp out the last bits of rounding spill.
        lo, hi = (lam1, lam0) if lam1 <= lam0 else (lam0, lam1)
        s = min(max(s, lo), hi)
    return U1, SHOCK, s, s


# ---------------------------------------------------------------------------
# wave fans


@dataclass(frozen=True)
class WaveFan:
    """Solution of one frozen-coefficient Riemann problem.

    ``states[i]`` is the constant state left of the family-i wave;
    ``states[n]`` is the right datum.  ``speed_lo/speed_hi`` collapse to the
    shock or contact speed for those kinds and hold the edge characteristic
    speeds for rarefactions; they are NaN on null waves.
    """

    model: SystemModel = field(repr=False)
    x: float
    t: float
    states: np.ndarray           # (n+1, n)
    strengths: np.ndarray        # (n,)
    kinds: tuple
    speed_lo: np.ndarray
    speed_hi: np.ndarray

    @property
    def left(self):
        return self.states[0]

    @property
    def right(self):
        return self.states[-1]

    @property
    def n(self):
        return self.strengths.size

    def is_null(self) -> bool:
        return all(k == NULL for k in self.kinds)

    def max_abs_speed(self) -> float:
        speeds = np.concatenate([self.speed_lo, self.speed_hi])
        speeds = speeds[np.isfinite(speeds)]
        return float(np.max(np.abs(speeds))) if speeds.size else 0.0


def _null_fan(model, UL, x, t):
    UL = np.asarray(UL, dtype=float)
    n = model.n
    states = np.tile(UL, (n + 1, 1))
    nans = np.full(n, math.nan)
    return WaveFan(model, x, t, states, np.zeros(n), (NULL,) * n, nans.copy(), nans.copy())


def _build_fan(model, UL, tau, x, t):
    n = model.n
    states = np.empty((n + 1, n))
    states[0] = UL
    kinds = []
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        U1, kind, s_lo, s_hi = _wave_point(model, i, float(tau[i]), states[i], x, t)
        states[i + 1] = U1
        kinds.append(kind)
        lo[i] = s_lo
        hi[i] = s_hi
    return WaveFan(model, x, t, states, np.asarray(tau, dtype=float).copy(),
                   tuple(kinds), lo, hi)


def _validate_fan(fan):
    """Assert Lax admissibility of shocks and weak speed ordering."""
    model = fan.model
    for i, kind in enumerate(fan.kinds):
        if kind == SHOCK:
            s = fan.speed_lo[i]
            lam_left = _eigenvalue(model, i, fan.states[i], fan.x, fan.t)
            lam_right = _eigenvalue(model, i, fan.states[i + 1], fan.x, fan.t)
            # The speed of a strength-tau shock is only determined up to
            # ~eps/|tau| by the jump conditions; widen the slack accordingly
            # so micro-shocks are not rejected over rounding noise.
            noise = 64.0 * np.finfo(float).eps / max(abs(fan.strengths[i]), 1e-300)
            slack = LAX_SLACK * (1.0 + abs(s)) + min(noise, 1e-5)
            if not (lam_right <= s + slack and s <= lam_left + slack):
                raise AdmissibilityError(
                    f"family {i} shock speed {s} outside "
                    f"[{lam_right}, {lam_left}] (Lax)")
    prev_hi = -math.inf
    for i, kind in enumerate(fan.kinds):
        if kind == NULL:
            continue
        slack = LAX_SLACK * (1.0 + abs(fan.speed_lo[i]))
        if fan.speed_lo[i] < prev_hi - slack:
            raise AdmissibilityError(
                f"wave speeds out of order at family {i}")
        prev_hi = fan.speed_hi[i]


def solve_riemann(model: SystemModel, UL, UR, x: float, t: float,
                  max_strength: float = DEFAULT_MAX_STRENGTH) -> WaveFan:
    """Solve the Riemann problem with flux frozen at (x, t).

    Inverts the wave-fan map by damped Newton in strength space, starting
    from the linearized strengths l_i(U_L) . (U_R - U_L).  Raises
    NewtonDivergence when the iteration fails and SmallDataExceeded when
    the total strength leaves the configured validity region.
    """
    UL = np.asarray(UL, dtype=float)
    UR = np.asarray(UR, dtype=float)
    if np.array_equal(UL, UR):
        return _null_fan(model, UL, x, t)

    if model.n == 1:
        fan = _scalar_riemann(model, UL, UR, x, t)
    else:
        tau = _invert_fan_map(model, UL, UR, x, t)
        fan = _build_fan(model, UL, tau, x, t)

    total = float(np.sum(np.abs(fan.strengths)))
    if total > max_strength:
        raise SmallDataExceeded(
            f"total wave strength {total:.6g} exceeds cap {max_strength:.6g}")
    _validate_fan(fan)
    return fan


def _scalar_riemann(model, UL, UR, x, t):
    r = _scalar_orientation(model, UL, x, t)
    tau = np.array([(UR[0] - UL[0]) / r])
    return _build_fan(model, UL, tau, x, t)


def _invert_fan_map(model, UL, UR, x, t):
    n = model.n
    eig = eigen_decompose(model, UL, x, t)
    tau = eig.left @ (UR - UL)

    def residual(tv):
        U = UL
        for i in range(n):
            U, _, _, _ = _wave_point(model, i, float(tv[i]), U, x, t)
        return U - UR

    res = residual(tau)
    rnorm = float(np.max(np.abs(res)))
    delta = 1e-7
    for _ in range(NEWTON_MAX_ITER):
        if rnorm <= NEWTON_TOL:
            break
        J = np.empty((n, n))
        for i in range(n):
            bumped = tau.copy()
            bumped[i] += delta
            J[:, i] = (residual(bumped) - res) / delta
        try:
            step = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError as exc:
            raise NewtonDivergence("singular strength-space Jacobian") from exc
        alpha = 1.0
        for _ in range(30):
            res_try = residual(tau + alpha * step)
            if float(np.max(np.abs(res_try))) < rnorm:
                break
            alpha *= 0.5
        else:
            raise NewtonDivergence("damping exhausted in strength-space Newton")
        tau = tau + alpha * step
        res = res_try
        rnorm = float(np.max(np.abs(res_try)))
    if rnorm > NEWTON_ACCEPT:
        raise NewtonDivergence(
            f"strength-space Newton stalled at residual {rnorm:.3g}")
    return tau


# ---------------------------------------------------------------------------
# sampling


def _invert_rarefaction(fan, i, xi):
    """Strength tau' in (0, tau_i) with characteristic speed xi inside wave i."""
    model = fan.model
    base = fan.states[i]
    tau_i = float(fan.strengths[i])

    def speed_gap(tp):
        if tp <= 0.0:
            return fan.speed_lo[i] - xi
        U = _integral_curve(model, i, tp, base, fan.x, fan.t)
        return _eigenvalue(model, i, U, fan.x, fan.t) - xi

    tp = brentq(speed_gap, 0.0, tau_i, xtol=1e-14, rtol=8.9e-16, maxiter=100)
    return float(tp)


def sample_fan(fan: WaveFan, xi: float):
    """State of the self-similar fan along x/t = xi (left state on ties)."""
    state, _, _ = split_fan(fan, xi)
    return state


def split_fan(fan: WaveFan, xi: float):
    """Sampled state plus the strength split left/right of the ray.

    Waves strictly left of the ray (speed < xi, ties assigned right) land in
    tau_left, the rest in tau_right; a rarefaction straddling the ray is
    divided exactly at the interior state.  tau_left + tau_right equals the
    fan strengths.
    """
    n = fan.n
    tau_left = np.zeros(n)
    tau_right = np.zeros(n)
    state = fan.states[0]
    found = False
    for i in range(n):
        kind = fan.kinds[i]
        if kind == NULL:
            continue
        if found:
            tau_right[i] = fan.strengths[i]
            continue
        if kind in (SHOCK, CONTACT):
            if xi <= fan.speed_lo[i]:
                tau_right[i] = fan.strengths[i]
                found = True
            else:
                tau_left[i] = fan.strengths[i]
                state = fan.states[i + 1]
        else:
            if xi <= fan.speed_lo[i]:
                tau_right[i] = fan.strengths[i]
                found = True
            elif xi >= fan.speed_hi[i]:
                tau_left[i] = fan.strengths[i]
                state = fan.states[i + 1]
            else:
                if fan.model.n == 1:
                    tp = _scalar_interior_strength(fan, i, xi)
                else:
                    tp = _invert_rarefaction(fan, i, xi)
                tau_left[i] = tp
                tau_right[i] = fan.strengths[i] - tp
                state = _interior_state(fan, i, tp)
                found = True
    return state, tau_left, tau_right


def _interior_state(fan, i, tp):
    if fan.model.n == 1:
        r = _scalar_orientation(fan.model, fan.states[i], fan.x, fan.t)
        return fan.states[i] + tp * np.array([r])
    return _integral_curve(fan.model, i, tp, fan.states[i], fan.x, fan.t)


def _scalar_interior_strength(fan, i, xi):
    model = fan.model
    base = fan.states[i]
    r = _scalar_orientation(model, base, fan.x, fan.t)

    def speed_gap(tp):
        u = base + tp * np.array([r])
        return _eigenvalue(model, 0, u, fan.x, fan.t) - xi

    return float(brentq(speed_gap, 0.0, float(fan.strengths[i]),
                        xtol=1e-14, rtol=8.9e-16, maxiter=100))
