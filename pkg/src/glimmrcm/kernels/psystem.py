"""Compiled wave-curve primitives for the gamma-law system.

Same algorithms as the generic path in ``glimmrcm.riemann`` (RK4 on the
oriented unit eigenvector field; Newton continuation with left-eigenvector
projection for the shock branch), specialized to F = (-u, v^-gamma) and
hand-unrolled for scalar speed.  The generic path remains the fallback and
the reference these kernels are tested against.
"""

import math

import numpy as np
from numba import njit

from ..errors import HugoniotSolveFailure

HUGONIOT_TOL = 1e-13  # matches glimmrcm.riemann.HUGONIOT_TOL


@njit(cache=True)
def _rvec(family, v, gamma):
    """Oriented unit right eigenvector components (dv, du)/dtau."""
    c = math.sqrt(gamma) * v ** (-(gamma + 1.0) / 2.0)
    den = math.sqrt(1.0 + c * c)
    if family == 0:
        return 1.0 / den, c / den
    return -1.0 / den, c / den


@njit(cache=True)
def rarefaction_rk4(family, tau, v0, u0, gamma, substeps):
    """Integral-curve point after ``substeps`` fixed RK4 steps."""
    v = v0
    u = u0
    h = tau / substeps
    for _ in range(substeps):
        k1v, k1u = _rvec(family, v, gamma)
        k2v, k2u = _rvec(family, v + 0.5 * h * k1v, gamma)
        k3v, k3u = _rvec(family, v + 0.5 * h * k2v, gamma)
        k4v, k4u = _rvec(family, v + h * k3v, gamma)
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        u = u + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    return v, u


@njit(cache=True)
def hugoniot_newton(family, tau, v0, u0, gamma):
    """Shock-branch point and speed; returns (v, u, s, converged)."""
    c0 = math.sqrt(gamma) * v0 ** (-(gamma + 1.0) / 2.0)
    m = math.sqrt(1.0 + c0 * c0) / (2.0 * c0)
    if family == 0:
        lv, lu = m * c0, m
        s = -c0
    else:
        lv, lu = -m * c0, m
        s = c0
    p0 = v0 ** (-gamma)
    scale = 1.0 + max(abs(u0), abs(p0))

    n_cont = max(1, int(math.ceil(abs(tau) / 0.1)))
    dtau = tau / n_cont
    v = v0
    u = u0
    for k in range(1, n_cont + 1):
        tau_k = tau * (k / n_cont)
        rv, ru = _rvec(family, v if k > 1 else v0, gamma)
        v = v + dtau * rv
        u = u + dtau * ru
        converged = False
        for _ in range(40):
            dv = v - v0
            du = u - u0
            r0 = -du - s * dv
            r1 = (v ** (-gamma) - p0) - s * du
            r2 = lv * dv + lu * du - tau_k
            rnorm = max(abs(r0), abs(r1), abs(r2))
            if rnorm <= HUGONIOT_TOL * scale:
                converged = True
                break
            # J rows: d(res)/d(v, u, s)
            a00, a01, a02 = -s, -1.0, -dv
            a10, a11, a12 = -gamma * v ** (-gamma - 1.0), -s, -du
            a20, a21, a22 = lv, lu, 0.0
            det = (a00 * (a11 * a22 - a12 * a21)
                   - a01 * (a10 * a22 - a12 * a20)
                   + a02 * (a10 * a21 - a11 * a20))
            if det == 0.0:
                return v, u, s, False
            b0, b1, b2 = -r0, -r1, -r2
            sv = (b0 * (a11 * a22 - a12 * a21)
                  - a01 * (b1 * a22 - a12 * b2)
                  + a02 * (b1 * a21 - a11 * b2)) / det
            su = (a00 * (b1 * a22 - a12 * b2)
                  - b0 * (a10 * a22 - a12 * a20)
                  + a02 * (a10 * b2 - b1 * a20)) / det
            ss = (a00 * (a11 * b2 - b1 * a21)
                  - a01 * (a10 * b2 - b1 * a20)
                  + b0 * (a10 * a21 - a11 * a20)) / det
            alpha = 1.0
            for _ in range(25):
                v_try = v + alpha * sv
                u_try = u + alpha * su
                s_try = s + alpha * ss
                dv_t = v_try - v0
                du_t = u_try - u0
                t0 = -du_t - s_try * dv_t
                t1 = (v_try ** (-gamma) - p0) - s_try * du_t
                t2 = lv * dv_t + lu * du_t - tau_k
                if max(abs(t0), abs(t1), abs(t2)) < rnorm:
                    break
                alpha *= 0.5
            v = v + alpha * sv
            u = u + alpha * su
            s = s + alpha * ss
        if not converged:
            return v, u, s, False
    return v, u, s, True


def make_curve_kernels(gamma):
    """Adapters matching the generic curve-primitive signatures."""

    def rarefaction(model, family, tau, U0, x, t, substeps):
        v, u = rarefaction_rk4(family, tau, float(U0[0]), float(U0[1]),
                               gamma, substeps)
        return np.array([v, u])

    def hugoniot(model, family, tau, U0, x, t):
        v, u, s, ok = hugoniot_newton(family, tau, float(U0[0]), float(U0[1]), gamma)
        if not ok:
            raise HugoniotSolveFailure(
                f"no convergence at strength {tau} of family {family}")
        return np.array([v, u]), float(s)

    return {"rarefaction": rarefaction, "hugoniot": hugoniot}
