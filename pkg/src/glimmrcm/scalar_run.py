"""Fast driver for the scalar builtin systems.

Marches whole strips through the kernels in ``kernels.scalar`` (compiled
or vectorized numpy, chosen by the backend flag) instead of looping over
columns in Python.  Semantics match the generic path in ``scheme``; tests
cross-check the two.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (BallExit, BoundaryBreach, CFLViolation, NewtonDivergence,
                     NumericalError, SmallDataExceeded, ValidationError)
from .kernels import scalar as sk
from .kernels import use_numba
from .scheme import BALL_SLACK, PiecewiseConstant, StaggeredGrid, Trajectory

KEEP_BYTES_LIMIT = 200 * 1024 * 1024

_KIND_NULL, _KIND_SHOCK, _KIND_RAREFACTION, _KIND_CONTACT = 0, 1, 2, 3


@dataclass
class ScalarStrip:
    """Array-backed strip record with the same protocol as StripSolution."""

    grid: StaggeredGrid = field(repr=False)
    model: object = field(repr=False)
    s: int
    t_lo: float
    r0: int                      # leftmost odd column of the level
    u: np.ndarray = field(repr=False)        # (m,) sampled states
    u_hat: np.ndarray = field(repr=False)    # (m,) after the source split
    V: np.ndarray = field(repr=False)        # (m,) right-facing traces
    W: np.ndarray = field(repr=False)        # (m,) left-facing traces
    a_fan: np.ndarray = field(repr=False)    # (nf,) frozen coefficient
    tau: np.ndarray = field(repr=False)      # (nf,) signed strengths
    kind: np.ndarray = field(repr=False)     # (nf,) wave kind codes
    speed_lo: np.ndarray = field(repr=False)
    speed_hi: np.ndarray = field(repr=False)
    tau_left: np.ndarray = field(repr=False)
    tau_right: np.ndarray = field(repr=False)
    sampled: np.ndarray = field(repr=False)  # (nf,) states at the random ray
    a_next: float = 0.0
    max_abs_speed: float = 0.0

    @property
    def t_hi(self):
        return self.t_lo + self.grid.dt

    @property
    def fan_cols(self):
        return np.arange(self.r0 + 1, self.r0 + 2 * self.tau.size, 2,
                         dtype=np.int64)

    def evaluate(self, x, t=None):
        """Profile value(s) at position(s) x, time t in [t_lo, t_hi]."""
        if t is None:
            t = self.t_lo
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        h = self.grid.h
        nf = self.tau.size
        f0 = self.r0 + 1
        j = np.ceil((xs / h - f0 - 1.0) / 2.0 - 1e-12).astype(np.int64)
        out = np.empty(xs.size)
        below = j < 0
        above = j >= nf
        out[below] = self.W[0]
        out[above] = self.V[-1]
        inside = ~(below | above)
        if inside.any():
            ji = j[inside]
            xr = (f0 + 2.0 * ji) * h
            ul = self.V[:-1][ji]
            ur = self.W[1:][ji]
            if t <= self.t_lo:
                out[inside] = np.where(xs[inside] <= xr, ul, ur)
            else:
                xi = (xs[inside] - xr) / (t - self.t_lo)
                kind = self.kind[ji]
                af = self.a_fan[ji]
                s_lo = self.speed_lo[ji]
                s_hi = self.speed_hi[ji]
                um = xi / np.where(af == 0.0, 1.0, af)
                interior = (kind == _KIND_RAREFACTION) & (xi > s_lo) & (xi < s_hi)
                left = xi <= s_lo
                val = np.where(interior, um, np.where(left, ul, ur))
                out[inside] = np.where(kind == _KIND_NULL, ul, val)
        out = out[:, None]
        return out[0] if np.isscalar(x) else out

    def tv(self) -> float:
        total = float(np.sum(np.abs(self.tau)))
        if self.V.size > 2:
            total += float(np.sum(np.abs(self.V[1:-1] - self.W[1:-1])))
        return total

    def sup_norm(self) -> float:
        return max(float(np.max(np.abs(self.V))),
                   float(np.max(np.abs(self.W))))

    def wave_data(self):
        return {
            "fan_cols": self.fan_cols,
            "tau": self.tau[:, None],
            "kind": self.kind[:, None],
            "speed_lo": self.speed_lo[:, None],
            "speed_hi": self.speed_hi[:, None],
            "tau_left": self.tau_left[:, None],
            "tau_right": self.tau_right[:, None],
            "gnl": np.array([k == "gnl" for k in self.model.field_kinds]),
        }


def _status_error(status, loc, grid, r0, s):
    odd_x = (r0 + 2 * loc) * grid.h
    fan_x = (r0 + 1 + 2 * loc) * grid.h
    msgs = {
        1: NewtonDivergence(
            f"flux-level Newton failed (right trace) at x={odd_x:.6g}, level {s}"),
        2: NewtonDivergence(
            f"flux-level Newton failed (left trace) at x={odd_x:.6g}, level {s}"),
        3: BallExit(f"state left the ball near x={odd_x:.6g}, level {s}"),
        4: CFLViolation(
            f"wave speed reached the mesh speed at x={fan_x:.6g}, level {s}"),
        5: SmallDataExceeded(
            f"wave strength above the small-data cap at x={fan_x:.6g}, level {s}"),
        6: BoundaryBreach(
            f"nontrivial wave inside the boundary guard band at x={fan_x:.6g}, "
            f"level {s}"),
        7: NumericalError(f"coefficient a(x,t) nonpositive near x={odd_x:.6g}"),
        8: NumericalError(
            f"resonant state (flux derivative ~ 0) at x={odd_x:.6g}, level {s}; "
            "the flux-level equations need |a u| bounded away from zero"),
    }
    return msgs.get(status, NumericalError(f"kernel status {status}"))


def _sample_initial(U0, xs):
    if isinstance(U0, PiecewiseConstant):
        idx = np.searchsorted(U0.breakpoints, xs, side="left")
        return U0.values[idx, 0]
    return np.array([float(np.atleast_1d(np.asarray(U0(x), dtype=float))[0])
                     for x in xs])


def run_scalar(model, grid, seq, U0, t_final, monitors=(), *, ball=None,
               max_strength=0.5, keep_levels=False, guard=True,
               snapshot_times=None, keep="auto"):
    """Scalar-kernel twin of scheme.run; returns the same Trajectory type."""
    if model.name == "burgers_inhom":
        flux_kind = 0
    elif model.name == "advection_var":
        flux_kind = 1
    else:  # pragma: no cover - guarded by the dispatch test
        raise ValidationError(f"no scalar kernel for system {model.name}")
    p = model.params
    a_inf, eps, kappa = p["a_inf"], p["eps"], p["kappa"]

    if ball is None:
        ball_lo, ball_hi = -math.inf, math.inf
    else:
        c = float(np.atleast_1d(ball.center)[0])
        ball_lo = c - ball.radius - BALL_SLACK
        ball_hi = c + ball.radius + BALL_SLACK

    n_strips = grid.strip_count(t_final)
    cols0 = grid.columns(0)
    a0 = seq.sample(0)
    u = _sample_initial(U0, cols0 * grid.h + a0 * grid.h)
    if ball is not None:
        half = ball.shrink(0.5)
        for uj in (u.min(), u.max()):
            if not half.contains(np.array([uj]), BALL_SLACK):
                raise BallExit(
                    f"initial data {uj} outside the half-radius ball; "
                    "the theory needs room for the solution to move")

    advance = sk.strip_advance if use_numba() else sk.strip_advance_np

    m0 = cols0.size
    if keep == "auto":
        keep_all = n_strips * m0 * 13 * 8 <= KEEP_BYTES_LIMIT
    else:
        keep_all = bool(keep)
    snap_idx = set()
    if snapshot_times is not None:
        for ts in snapshot_times:
            snap_idx.add(min(int(math.floor(ts / grid.dt * (1.0 + 1e-12))),
                             n_strips - 1))

    r0 = int(cols0[0])
    strips = [None] * n_strips
    levels = [] if keep_levels else None
    if keep_levels:
        levels.append((r0, u.copy()))
    dt, h, lam = grid.dt, grid.h, grid.lambda_cfl

    for s in range(n_strips):
        t = grid.time_of(s)
        a_next = seq.sample(s + 1)
        (status, loc, u_hat, V, W, a_fan, tau, kind, sp_lo, sp_hi,
         tau_l, tau_r, u_next, max_speed) = advance(
            u, r0, t, h, dt, lam, a_next, flux_kind, a_inf, eps, kappa,
            ball_lo, ball_hi, max_strength, grid.x_min, grid.x_max,
            1 if guard else 0)
        if status != 0:
            raise _status_error(status, loc, grid, r0, s)
        strip = ScalarStrip(grid, model, s, t, r0, u, u_hat, V, W, a_fan,
                            tau, kind, sp_lo, sp_hi, tau_l, tau_r, u_next,
                            a_next, max_speed)
        if keep_all or s in snap_idx or s == n_strips - 1:
            strips[s] = strip
        for mon in monitors:
            mon.on_strip(strip)

        next_cols = grid.columns(s + 1)
        r0_next = int(next_cols[0])
        parts = []
        if r0_next < r0 + 1:
            parts.append(u_hat[:1])
        parts.append(u_next)
        if int(next_cols[-1]) > r0 + 1 + 2 * (u_next.size - 1):
            parts.append(u_hat[-1:])
        u = np.concatenate(parts)
        r0 = r0_next
        if keep_levels:
            levels.append((r0, u.copy()))

    for mon in monitors:
        mon.finish()
    traj = Trajectory(model, grid, seq, t_final, strips, levels)
    for mon in monitors:
        reports = getattr(mon, "reports", None)
        if reports is not None:
            traj.reports = reports
    return traj
