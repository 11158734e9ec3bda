"""Strip-advance kernels for the scalar builtin systems.

Both builtins share the coefficient family a(x, t) = a_inf + eps e^{-t}
sech^2(x) and the source g(u, t) = kappa e^{-t} u; ``flux_kind`` picks the
flux: 0 for the convex F = a u^2 / 2, 1 for the linear F = a u.  The
compiled kernel and the vectorized numpy twin run the same operations in
the same order, so each backend is bit-for-bit deterministic and the two
agree to rounding noise.

A kernel returns a status code instead of raising: 0 ok, 1/2 flux-level
Newton failure (right/left trace), 3 state left the ball, 4 wave speed
reached the mesh speed, 5 wave strength above the small-data cap,
6 nontrivial wave inside the boundary guard band, 7 nonpositive
coefficient, 8 resonant state (flux derivative vanished).  ``loc`` is the
offending column or fan index.
"""

import math

import numpy as np

from . import HAS_NUMBA

FLUX_TOL = 1e-12
GUARD_STRENGTH = 1e-8

if HAS_NUMBA:
    from numba import njit
else:  # pragma: no cover - the numpy twin is used instead
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn
        return wrap


# ---------------------------------------------------------------------------
# compiled path


@njit(cache=True)
def _sech2(x):
    e = math.exp(-abs(x))
    s = 2.0 * e / (1.0 + e * e)
    return s * s


@njit(cache=True)
def _coef_a(x, et, a_inf, eps):
    return a_inf + eps * et * _sech2(x)


@njit(cache=True)
def _coef_ax(x, et, eps):
    return eps * et * (-2.0) * _sech2(x) * math.tanh(x)


@njit(cache=True)
def _newton_quad(acoef, c, v0):
    """Damped Newton for 0.5 acoef v^2 = c from v0; returns (ok, v)."""
    v = v0
    res = 0.5 * acoef * v * v - c
    for _ in range(60):
        if abs(res) <= FLUX_TOL:
            return True, v
        dF = acoef * v
        if dF == 0.0:
            return False, v
        step = -res / dF
        alpha = 1.0
        improved = False
        vt = v
        rt = res
        for _h in range(25):
            vt = v + alpha * step
            rt = 0.5 * acoef * vt * vt - c
            if abs(rt) < abs(res):
                improved = True
                break
            alpha *= 0.5
        if not improved:
            return False, v
        v = vt
        res = rt
    return abs(res) <= FLUX_TOL, v


@njit(cache=True)
def strip_advance(u, r0, t, h, dt, lam, a_next, flux_kind, a_inf, eps,
                  kappa, ball_lo, ball_hi, max_strength, x_min, x_max,
                  guard_on):
    """Advance one strip; see the module docstring for the status codes."""
    m = u.size
    nf = m - 1
    status = 0
    loc = -1
    u_hat = np.empty(m)
    V = np.empty(m)
    W = np.empty(m)
    a_fan = np.zeros(nf)
    tau = np.zeros(nf)
    kind = np.zeros(nf, np.int64)
    sp_lo = np.zeros(nf)
    sp_hi = np.zeros(nf)
    tau_l = np.zeros(nf)
    tau_r = np.zeros(nf)
    u_next = np.zeros(nf)
    max_speed = 0.0
    et = math.exp(-t)
    g_fac = kappa * et
    guard_lo = x_min + 4.0 * h
    guard_hi = x_max - 4.0 * h

    # odd columns: source split and flux-level traces
    for j in range(m):
        x = (r0 + 2 * j) * h
        uh = u[j] - dt * (g_fac * u[j])
        u_hat[j] = uh
        if not (ball_lo <= uh <= ball_hi):
            status = 3
            loc = j
            break
        if eps == 0.0:
            V[j] = uh
            W[j] = uh
            continue
        a0 = _coef_a(x, et, a_inf, eps)
        a_r = _coef_a(x + h, et, a_inf, eps)
        a_l = _coef_a(x - h, et, a_inf, eps)
        if a0 <= 0.0 or a_r <= 0.0 or a_l <= 0.0:
            status = 7
            loc = j
            break
        ax = _coef_ax(x, et, eps)
        if flux_kind == 0:
            dF = a0 * uh
            if abs(dF) < 1e-14 * (1.0 + abs(uh)):
                status = 8
                loc = j
                break
            th = (0.5 * ax * uh * uh) / dF
            c = 0.5 * a0 * uh * uh
            ok, v = _newton_quad(a_r, c, uh - h * th)
            if not ok:
                status = 1
                loc = j
                break
            V[j] = v
            ok, w = _newton_quad(a_l, c, uh + h * th)
            if not ok:
                status = 2
                loc = j
                break
            W[j] = w
        else:
            c = a0 * uh
            V[j] = c / a_r
            W[j] = c / a_l
        if not (ball_lo <= V[j] <= ball_hi):
            status = 3
            loc = j
            break
        if not (ball_lo <= W[j] <= ball_hi):
            status = 3
            loc = j
            break

    # even columns: frozen-coefficient Riemann fans, sampled at xi
    if status == 0:
        xi = a_next * lam
        for k in range(nf):
            x_f = (r0 + 1 + 2 * k) * h
            af = _coef_a(x_f, et, a_inf, eps)
            a_fan[k] = af
            if af <= 0.0:
                status = 7
                loc = k
                break
            ul = V[k]
            ur = W[k + 1]
            if ul == ur:
                u_next[k] = ul
                continue
            du = ur - ul
            tau[k] = du
            if abs(du) > max_strength:
                status = 5
                loc = k
                break
            if flux_kind == 0:
                if du < 0.0:
                    kind[k] = 1
                    sspd = 0.5 * af * (ul + ur)
                    sp_lo[k] = sspd
                    sp_hi[k] = sspd
                    if xi <= sspd:
                        u_next[k] = ul
                        tau_r[k] = du
                    else:
                        u_next[k] = ur
                        tau_l[k] = du
                else:
                    kind[k] = 2
                    lo = af * ul
                    hi = af * ur
                    sp_lo[k] = lo
                    sp_hi[k] = hi
                    if xi <= lo:
                        u_next[k] = ul
                        tau_r[k] = du
                    elif xi >= hi:
                        u_next[k] = ur
                        tau_l[k] = du
                    else:
                        um = xi / af
                        u_next[k] = um
                        tau_l[k] = um - ul
                        tau_r[k] = ur - um
            else:
                kind[k] = 3
                sp_lo[k] = af
                sp_hi[k] = af
                if xi <= af:
                    u_next[k] = ul
                    tau_r[k] = du
                else:
                    u_next[k] = ur
                    tau_l[k] = du
            spd = max(abs(sp_lo[k]), abs(sp_hi[k]))
            if spd > max_speed:
                max_speed = spd
            if spd >= lam:
                status = 4
                loc = k
                break
            if guard_on == 1 and abs(du) > GUARD_STRENGTH and (
                    x_f <= guard_lo or x_f >= guard_hi):
                status = 6
                loc = k
                break
            if not (ball_lo <= u_next[k] <= ball_hi):
                status = 3
                loc = k
                break

    return (status, loc, u_hat, V, W, a_fan, tau, kind, sp_lo, sp_hi,
            tau_l, tau_r, u_next, max_speed)


# ---------------------------------------------------------------------------
# numpy twin


def _sech2_np(x):
    e = np.exp(-np.abs(x))
    s = 2.0 * e / (1.0 + e * e)
    return s * s


def _coef_a_np(x, et, a_inf, eps):
    return a_inf + eps * et * _sech2_np(x)


def _coef_ax_np(x, et, eps):
    return eps * et * (-2.0) * _sech2_np(x) * np.tanh(x)


def _newton_quad_np(acoef, c, v0):
    """Vectorized twin of _newton_quad; returns (ok mask, v)."""
    v = np.array(v0, dtype=float, copy=True)
    res = 0.5 * acoef * v * v - c
    fail = np.zeros(v.shape, dtype=bool)
    for _ in range(60):
        active = (np.abs(res) > FLUX_TOL) & ~fail
        if not active.any():
            break
        dF = acoef * v
        dead = active & (dF == 0.0)
        fail |= dead
        active &= ~dead
        step = np.where(active, -res / np.where(dF == 0.0, 1.0, dF), 0.0)
        alpha = np.ones_like(v)
        vt = v + alpha * step
        rt = 0.5 * acoef * vt * vt - c
        need = active & (np.abs(rt) >= np.abs(res))
        for _h in range(25):
            if not need.any():
                break
            alpha = np.where(need, 0.5 * alpha, alpha)
            vt = np.where(need, v + alpha * step, vt)
            rt = np.where(need, 0.5 * acoef * vt * vt - c, rt)
            need = need & (np.abs(rt) >= np.abs(res))
        fail |= need
        upd = active & ~need
        v = np.where(upd, vt, v)
        res = np.where(upd, rt, res)
    ok = ~(fail | (np.abs(res) > FLUX_TOL))
    return ok, v


def _first_fail(checks):
    """Earliest failing index over precedence-ordered (mask, code) pairs."""
    any_mask = np.zeros(checks[0][0].shape, dtype=bool)
    for mask, _ in checks:
        any_mask |= mask
    if not any_mask.any():
        return 0, -1
    idx = int(np.argmax(any_mask))
    for mask, code in checks:
        if mask[idx]:
            return code, idx
    return 0, -1  # unreachable


def strip_advance_np(u, r0, t, h, dt, lam, a_next, flux_kind, a_inf, eps,
                     kappa, ball_lo, ball_hi, max_strength, x_min, x_max,
                     guard_on):
    """Vectorized twin of strip_advance with identical semantics."""
    u = np.asarray(u, dtype=float)
    m = u.size
    nf = m - 1
    et = math.exp(-t)
    g_fac = kappa * et
    x = (r0 + 2.0 * np.arange(m)) * h

    u_hat = u - dt * (g_fac * u)
    in_ball = (ball_lo <= u_hat) & (u_hat <= ball_hi)

    if eps == 0.0:
        V = u_hat.copy()
        W = u_hat.copy()
        newton_v_fail = np.zeros(m, dtype=bool)
        newton_w_fail = np.zeros(m, dtype=bool)
        coef_bad = np.zeros(m, dtype=bool)
        resonant = np.zeros(m, dtype=bool)
    else:
        a0 = _coef_a_np(x, et, a_inf, eps)
        a_r = _coef_a_np(x + h, et, a_inf, eps)
        a_l = _coef_a_np(x - h, et, a_inf, eps)
        coef_bad = (a0 <= 0.0) | (a_r <= 0.0) | (a_l <= 0.0)
        ax = _coef_ax_np(x, et, eps)
        if flux_kind == 0:
            dF = a0 * u_hat
            resonant = np.abs(dF) < 1e-14 * (1.0 + np.abs(u_hat))
            safe_dF = np.where(resonant, 1.0, dF)
            th = (0.5 * ax * u_hat * u_hat) / safe_dF
            c = 0.5 * a0 * u_hat * u_hat
            ok_v, V = _newton_quad_np(a_r, c, u_hat - h * th)
            ok_w, W = _newton_quad_np(a_l, c, u_hat + h * th)
            newton_v_fail = ~ok_v
            newton_w_fail = ~ok_w
        else:
            resonant = np.zeros(m, dtype=bool)
            c = a0 * u_hat
            V = c / a_r
            W = c / a_l
            newton_v_fail = np.zeros(m, dtype=bool)
            newton_w_fail = np.zeros(m, dtype=bool)

    status, loc = _first_fail([
        (~in_ball, 3),
        (coef_bad, 7),
        (resonant, 8),
        (newton_v_fail, 1),
        (newton_w_fail, 2),
        (~((ball_lo <= V) & (V <= ball_hi)), 3),
        (~((ball_lo <= W) & (W <= ball_hi)), 3),
    ])

    a_fan = np.zeros(nf)
    tau = np.zeros(nf)
    kind = np.zeros(nf, np.int64)
    sp_lo = np.zeros(nf)
    sp_hi = np.zeros(nf)
    tau_l = np.zeros(nf)
    tau_r = np.zeros(nf)
    u_next = np.zeros(nf)
    max_speed = 0.0

    if status == 0 and nf > 0:
        xi = a_next * lam
        x_f = (r0 + 1.0 + 2.0 * np.arange(nf)) * h
        af = _coef_a_np(x_f, et, a_inf, eps)
        a_fan = af
        ul = V[:-1]
        ur = W[1:]
        live = ul != ur
        du = np.where(live, ur - ul, 0.0)
        tau = du
        if flux_kind == 0:
            shock = live & (du < 0.0)
            raref = live & (du > 0.0)
            kind = np.where(shock, 1, np.where(raref, 2, 0)).astype(np.int64)
            sspd = 0.5 * af * (ul + ur)
            lo = af * ul
            hi = af * ur
            sp_lo = np.where(shock, sspd, np.where(raref, lo, 0.0))
            sp_hi = np.where(shock, sspd, np.where(raref, hi, 0.0))
            take_l = (shock & (xi <= sspd)) | (raref & (xi <= lo))
            take_r = (shock & (xi > sspd)) | (raref & (xi >= hi))
            interior = raref & ~take_l & ~take_r
            safe_af = np.where(af == 0.0, 1.0, af)
            um = xi / safe_af
            u_next = np.where(take_l, ul,
                              np.where(take_r, ur,
                                       np.where(interior, um, ul)))
            tau_r = np.where(take_l, du, np.where(interior, ur - um, 0.0))
            tau_l = np.where(take_r, du, np.where(interior, um - ul, 0.0))
        else:
            kind = np.where(live, 3, 0).astype(np.int64)
            sp_lo = np.where(live, af, 0.0)
            sp_hi = sp_lo.copy()
            take_l = live & (xi <= af)
            take_r = live & ~take_l
            u_next = np.where(take_l | ~live, ul, ur)
            tau_r = np.where(take_l, du, 0.0)
            tau_l = np.where(take_r, du, 0.0)
        spd = np.maximum(np.abs(sp_lo), np.abs(sp_hi))
        guard_mask = np.zeros(nf, dtype=bool)
        if guard_on == 1:
            guard_mask = (np.abs(du) > GUARD_STRENGTH) & (
                (x_f <= x_min + 4.0 * h) | (x_f >= x_max - 4.0 * h))
        status, loc = _first_fail([
            (af <= 0.0, 7),
            (np.abs(du) > max_strength, 5),
            (spd >= lam, 4),
            (guard_mask, 6),
            (~((ball_lo <= u_next) & (u_next <= ball_hi)), 3),
        ])
        live_spd = spd[live] if live.any() else None
        max_speed = float(live_spd.max()) if live_spd is not None else 0.0

    return (status, loc, u_hat, V, W, a_fan, tau, kind, sp_lo, sp_hi,
            tau_l, tau_r, u_next, max_speed)
