"""Independent reference solutions for tests and convergence studies.

Nothing here shares code with the scheme's Riemann machinery: the scalar
Riemann solution is built from the convex flux alone (numeric inverse of
the characteristic speed), the linear oracle integrates characteristics
with a self-contained RK4, and the ODE oracle integrates the source term
directly.  ``fine_grid_reference`` is the one deliberate exception — it
reruns the scheme itself on a finer mesh for self-convergence studies.
"""

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import IntegrationFailure, NonConvex

CLOSED_FORM = "closed_form"
CHARACTERISTICS = "characteristics"
ODE = "ode"
FINE_GRID = "fine_grid"


@dataclass(frozen=True)
class OracleSolution:
    """Deterministic reference evaluator on a validity window."""

    evaluator: Callable          # (x, t) -> state vector
    t_range: Tuple[float, float]
    x_range: Tuple[float, float]
    provenance: str

    def __call__(self, x, t):
        t_lo, t_hi = self.t_range
        x_lo, x_hi = self.x_range
        if not (t_lo <= t <= t_hi):
            raise IntegrationFailure(
                f"time {t} outside oracle validity window [{t_lo}, {t_hi}]")
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if xs.size and (xs.min() < x_lo or xs.max() > x_hi):
            raise IntegrationFailure(
                f"position outside oracle validity window [{x_lo}, {x_hi}]")
        out = np.array([np.atleast_1d(self.evaluator(float(xi), float(t)))
                        for xi in xs], dtype=float)
        return out[0] if np.isscalar(x) else out


# ---------------------------------------------------------------------------
# exact scalar Riemann solution


def _numeric_dflux(flux, u, delta=1e-7):
    d = delta * (1.0 + abs(u))
    return (flux(u + d) - flux(u - d)) / (2.0 * d)


def scalar_riemann_exact(flux: Callable, u_L: float, u_R: float,
                         dflux: Callable = None) -> OracleSolution:
    """Entropy solution of u_t + flux(u)_x = 0 with two-state data.

    Shock with the Rankine-Hugoniot speed for u_L > u_R, centered
    rarefaction u = (flux')^{-1}(x/t) clipped to the data for u_L < u_R.
    The flux must be convex across the data interval (checked on a sample
    of the derivative); an affine flux degenerates to pure transport.
    """
    u_L, u_R = float(u_L), float(u_R)
    if dflux is None:
        def dflux(u, _f=flux):
            return _numeric_dflux(_f, u)

    lo, hi = min(u_L, u_R), max(u_L, u_R)
    span = hi - lo
    if span > 0.0:
        probes = np.linspace(lo, hi, 33)
        slopes = np.array([dflux(u) for u in probes])
        dls = np.diff(slopes)
        # tolerance at the noise floor of the finite-difference derivative
        tol = 1e-8 * (1.0 + float(np.max(np.abs(slopes))))
        if np.any(dls < -tol):
            raise NonConvex("flux is not convex across the data interval")
        affine = bool(np.all(np.abs(dls) <= tol))
    else:
        affine = False

    if u_L == u_R:
        def evaluator(x, t):
            return np.array([u_L])
    elif affine:
        speed = float(dflux(u_L))

        def evaluator(x, t):
            if t <= 0.0:
                return np.array([u_L if x <= 0.0 else u_R])
            return np.array([u_L if x <= speed * t else u_R])
    elif u_L > u_R:
        sigma = (flux(u_L) - flux(u_R)) / (u_L - u_R)

        def evaluator(x, t):
            if t <= 0.0:
                return np.array([u_L if x <= 0.0 else u_R])
            return np.array([u_L if x <= sigma * t else u_R])
    else:
        lam_L = float(dflux(u_L))
        lam_R = float(dflux(u_R))

        def evaluator(x, t):
            if t <= 0.0:
                return np.array([u_L if x <= 0.0 else u_R])
            xi = x / t
            if xi <= lam_L:
                return np.array([u_L])
            if xi >= lam_R:
                return np.array([u_R])
            a, b = u_L, u_R
            for _ in range(200):
                mid = 0.5 * (a + b)
                if float(dflux(mid)) < xi:
                    a = mid
                else:
                    b = mid
                if b - a <= 1e-15 * (1.0 + abs(a)):
                    break
            return np.array([0.5 * (a + b)])

    return OracleSolution(evaluator, (0.0, math.inf), (-math.inf, math.inf),
                          CLOSED_FORM)


# ---------------------------------------------------------------------------
# method of characteristics for the linear conservative equation


def characteristics_linear(a: Callable, g: Callable, U0: Callable,
                           a_x: Callable = None,
                           step: float = 1e-3) -> OracleSolution:
    """Oracle for u_t + (a(x,t) u)_x + g(u, x, t) = 0, pre-shock linear.

    Traces dx/dtau = a(x, tau) backward from (x, t) by RK4, then brings
    du/dtau = -a_x u - g(u, x(tau), tau) forward along the same
    characteristic, re-integrating x forward so both RK4 stages see
    consistent positions.
    """
    if a_x is None:
        def a_x(x, t, _a=a):
            d = 1e-6 * (1.0 + abs(x))
            return (_a(x + d, t) - _a(x - d, t)) / (2.0 * d)

    def evaluator(x, t):
        if t <= 0.0:
            return np.atleast_1d(np.asarray(U0(x), dtype=float))
        n_steps = max(1, int(math.ceil(t / step)))
        dtau = t / n_steps
        # backward characteristic to the foot point
        y = x
        for k in range(n_steps):
            tau = t - k * dtau
            k1 = a(y, tau)
            k2 = a(y - 0.5 * dtau * k1, tau - 0.5 * dtau)
            k3 = a(y - 0.5 * dtau * k2, tau - 0.5 * dtau)
            k4 = a(y - dtau * k3, tau - dtau)
            y = y - dtau * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not math.isfinite(y):
            raise IntegrationFailure("characteristic escaped to infinity")
        # forward along the characteristic, carrying u
        u = float(np.atleast_1d(np.asarray(U0(y), dtype=float))[0])

        def rhs(state, tau):
            yy, uu = state
            return (a(yy, tau), -a_x(yy, tau) * uu - g(uu, yy, tau))

        state = (y, u)
        for k in range(n_steps):
            tau = k * dtau
            s1 = rhs(state, tau)
            s2 = rhs((state[0] + 0.5 * dtau * s1[0],
                      state[1] + 0.5 * dtau * s1[1]), tau + 0.5 * dtau)
            s3 = rhs((state[0] + 0.5 * dtau * s2[0],
                      state[1] + 0.5 * dtau * s2[1]), tau + 0.5 * dtau)
            s4 = rhs((state[0] + dtau * s3[0],
                      state[1] + dtau * s3[1]), tau + dtau)
            state = (state[0] + dtau * (s1[0] + 2 * s2[0] + 2 * s3[0] + s4[0]) / 6.0,
                     state[1] + dtau * (s1[1] + 2 * s2[1] + 2 * s3[1] + s4[1]) / 6.0)
        if not all(math.isfinite(v) for v in state):
            raise IntegrationFailure("characteristic integration diverged")
        return np.array([state[1]])

    return OracleSolution(evaluator, (0.0, math.inf), (-math.inf, math.inf),
                          CHARACTERISTICS)


# ---------------------------------------------------------------------------
# ODE reference for space-constant data


def ode_reference(source: Callable, U0, step: float = 1e-3) -> OracleSolution:
    """Reference for U'(t) = -source(U, t) from spatially constant data."""
    U0 = np.atleast_1d(np.asarray(U0, dtype=float))

    def evaluator(x, t):
        if t <= 0.0:
            return U0.copy()
        n_steps = max(1, int(math.ceil(t / step)))
        dtau = t / n_steps
        U = U0.copy()
        for k in range(n_steps):
            tau = k * dtau
            k1 = -np.asarray(source(U, tau), dtype=float)
            k2 = -np.asarray(source(U + 0.5 * dtau * k1, tau + 0.5 * dtau), dtype=float)
            k3 = -np.asarray(source(U + 0.5 * dtau * k2, tau + 0.5 * dtau), dtype=float)
            k4 = -np.asarray(source(U + dtau * k3, tau + dtau), dtype=float)
            U = U + dtau * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not np.all(np.isfinite(U)):
            raise IntegrationFailure("source ODE diverged")
        return U

    return OracleSolution(evaluator, (0.0, math.inf), (-math.inf, math.inf),
                          ODE)


# ---------------------------------------------------------------------------
# fine-grid self-convergence reference


def fine_grid_reference(make_trajectory: Callable, h: float,
                        h_ref: float) -> OracleSolution:
    """Scheme-at-finer-mesh reference for self-convergence studies.

    ``make_trajectory(h_ref)`` must rerun the configured problem at mesh
    width h_ref with the same sampling sequence; h_ref may be at most h/8
    (or equal to h for the trivial self-comparison).
    """
    if h_ref != h and h_ref > h / 8.0:
        raise IntegrationFailure(
            f"reference mesh {h_ref} too coarse; need h_ref <= h/8 = {h / 8.0}")
    traj = make_trajectory(h_ref)

    def evaluator(x, t):
        return np.atleast_1d(traj.evaluate(t, x))

    return OracleSolution(evaluator, (0.0, traj.t_final),
                          (traj.grid.x_min, traj.grid.x_max), FINE_GRID)
