"""The modified random choice scheme on a staggered space-time grid.

Mesh points x_r = r h sit at integer columns; time levels t_s = s dt with
dt = h / lambda_cfl.  States live on columns of parity opposite to the
level index ("odd" columns, r + s odd).  One strip advance runs:

1. odd columns: split the source, U_hat = U - dt G(U, x_r, t_s), then solve
   the flux-level equations F(V, x_{r+1}, t_s) = F(U_hat, x_r, t_s) =
   F(W, x_{r-1}, t_s), giving the traced values V (facing right) and W
   (facing left);
2. even columns: solve the Riemann problem with data (V^{r-1}, W^{r+1})
   and flux frozen at (x_r, t_s);
3. sample every fan at the random ray xi = lambda_cfl a_{s+1} to get the
   next level.

Within a strip the approximate solution is the fan solutions glued to the
constant traces, with vertical jump segments from W^q to V^q at the odd
columns.  The domain is truncated to [x_min, x_max] with constant
extension; runs abort when a nontrivial wave enters the 4h guard band at
either edge, so initial data must be constant near the boundary and the
flux inhomogeneity negligible there.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (BallExit, BoundaryBreach, CFLViolation, NewtonDivergence,
                     ValidationError)
from .riemann import (DEFAULT_MAX_STRENGTH, WaveFan, sample_fan,
                      solve_riemann, split_fan)
from .sequence import SamplingSequence
from .system import DomainBall, SystemModel, theta

FLUX_TOL = 1e-12        # flux-level Newton residual target (per component)
FLUX_MAX_ITER = 60
GUARD_CELLS = 4         # width of the boundary guard band, in mesh cells
GUARD_STRENGTH = 1e-8   # fan strength counted as a real wave by the guard
BALL_SLACK = 1e-12


# ---------------------------------------------------------------------------
# grid and initial data


@dataclass(frozen=True)
class StaggeredGrid:
    """Mesh geometry; dt is derived from h and the mesh speed."""

    h: float
    lambda_cfl: float
    x_min: float
    x_max: float

    def __post_init__(self):
        if self.h <= 0.0:
            raise ValidationError("mesh width h must be positive")
        if self.lambda_cfl <= 0.0:
            raise ValidationError("lambda_cfl must be positive")
        if self.x_max <= self.x_min:
            raise ValidationError("x_max must exceed x_min")
        if self.r_max - self.r_min < 2 * GUARD_CELLS + 4:
            raise ValidationError("domain too narrow for the guard bands")

    @property
    def dt(self) -> float:
        return self.h / self.lambda_cfl

    @property
    def r_min(self) -> int:
        return int(round(self.x_min / self.h))

    @property
    def r_max(self) -> int:
        return int(round(self.x_max / self.h))

    def x_of(self, r) -> float:
        return r * self.h

    def time_of(self, s) -> float:
        return s * self.dt

    def columns(self, s) -> np.ndarray:
        """Columns carrying states at level s (r + s odd)."""
        c0 = self.r_min if (self.r_min + s) % 2 == 1 else self.r_min + 1
        return np.arange(c0, self.r_max + 1, 2, dtype=np.int64)

    def strip_count(self, t_final) -> int:
        """Number of strips so that every t <= t_final lies in one."""
        if t_final < 0.0:
            raise ValidationError("t_final must be nonnegative")
        return int(math.floor(t_final / self.dt * (1.0 + 1e-12) + 1e-12)) + 1


@dataclass(frozen=True)
class PiecewiseConstant:
    """Piecewise constant profile, left-continuous at its breakpoints."""

    breakpoints: np.ndarray      # (k,), ascending
    values: np.ndarray           # (k+1, n)

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.breakpoints, dtype=float))
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        if v.shape[0] != b.size + 1:
            raise ValidationError("need one more value than breakpoints")
        if b.size > 1 and np.any(np.diff(b) <= 0.0):
            raise ValidationError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    def __call__(self, x):
        idx = int(np.searchsorted(self.breakpoints, x, side="left"))
        return self.values[idx]

    def tv(self) -> float:
        return float(np.sum(np.abs(np.diff(self.values, axis=0))))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def riemann_data(UL, UR, x0=0.0) -> PiecewiseConstant:
    return PiecewiseConstant(np.array([x0]), np.array([UL, UR], dtype=float))


def constant_data(U) -> PiecewiseConstant:
    U = np.atleast_1d(np.asarray(U, dtype=float))
    return PiecewiseConstant(np.array([0.0]), np.array([U, U]))


# ---------------------------------------------------------------------------
# level construction


@dataclass
class LevelStates:
    """States on the odd columns of one time level, with traces."""

    s: int
    t: float
    cols: np.ndarray         # (m,)
    U: np.ndarray            # (m, n) sampled states
    U_hat: np.ndarray        # (m, n) after the source split
    V: np.ndarray            # (m, n) right-facing traces
    W: np.ndarray            # (m, n) left-facing traces
    a: float                 # sampling offset that produced U

    @property
    def m(self):
        return self.cols.size


def split_source(model: SystemModel, U, x, t, dt):
    """Explicit source step U - dt G(U, x, t); exact passthrough when G = 0."""
    U = np.asarray(U, dtype=float)
    if model.source_is_zero:
        return U.copy()
    return U - dt * np.asarray(model.source(U, x, t), dtype=float)


def solve_flux_level(model: SystemModel, U_hat, x, t, h):
    """Traces (V, W) with F(V, x+h, t) = F(U_hat, x, t) = F(W, x-h, t).

    Damped Newton from the first-order initializers U_hat -+ h theta; exact
    passthrough for autonomous fluxes.
    """
    U_hat = np.asarray(U_hat, dtype=float)
    if model.flux_is_autonomous:
        return U_hat.copy(), U_hat.copy()
    th = theta(model, U_hat, x, t)
    target = np.asarray(model.flux(U_hat, x, t), dtype=float)
    V = _newton_flux_match(model, U_hat - h * th, target, x + h, t)
    W = _newton_flux_match(model, U_hat + h * th, target, x - h, t)
    return V, W


def _newton_flux_match(model, U0, target, x, t):
    U = np.asarray(U0, dtype=float).copy()
    res = np.asarray(model.flux(U, x, t), dtype=float) - target
    rnorm = float(np.max(np.abs(res)))
    for _ in range(FLUX_MAX_ITER):
        if rnorm <= FLUX_TOL:
            return U
        J = model.jacobian(U, x, t)
        try:
            step = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError as exc:
            raise NewtonDivergence(f"singular flux Jacobian at x={x}") from exc
        alpha = 1.0
        for _ in range(25):
            U_try = U + alpha * step
            res_try = np.asarray(model.flux(U_try, x, t), dtype=float) - target
            if float(np.max(np.abs(res_try))) < rnorm:
                break
            alpha *= 0.5
        else:
            raise NewtonDivergence(f"flux-level damping exhausted at x={x}")
        U = U + alpha * step
        res = res_try
        rnorm = float(np.max(np.abs(res_try)))
    if rnorm > FLUX_TOL:
        raise NewtonDivergence(
            f"flux-level Newton stalled at residual {rnorm:.3g} (x={x})")
    return U


def _check_ball(ball, states, what, slack=BALL_SLACK):
    if ball is None:
        return
    states = np.atleast_2d(states)
    for U in states:
        if not ball.contains(U, slack):
            raise BallExit(f"{what} left the state ball: {U}")


def build_level(model, grid, s, U_sampled, a, *, ball=None) -> LevelStates:
    """Assemble a level from sampled states: ball checks, split, traces."""
    cols = grid.columns(s)
    U = np.atleast_2d(np.asarray(U_sampled, dtype=float))
    if U.shape[0] != cols.size:
        raise ValidationError("state count does not match level columns")
    t = grid.time_of(s)
    _check_ball(ball, U, f"level {s} state")
    m = cols.size
    U_hat = np.empty_like(U)
    V = np.empty_like(U)
    W = np.empty_like(U)
    for j in range(m):
        x = grid.x_of(cols[j])
        U_hat[j] = split_source(model, U[j], x, t, grid.dt)
        V[j], W[j] = solve_flux_level(model, U_hat[j], x, t, grid.h)
    _check_ball(ball, U_hat, f"level {s} split state")
    _check_ball(ball, V, f"level {s} trace V")
    _check_ball(ball, W, f"level {s} trace W")
    return LevelStates(s, t, cols, U, U_hat, V, W, a)


def initial_level(model, grid, seq, U0: Callable, *, ball=None) -> LevelStates:
    """Level 0: sample the initial profile at the level-0 random points."""
    a0 = seq.sample(0)
    cols = grid.columns(0)
    U = np.array([np.atleast_1d(np.asarray(U0(grid.x_of(r) + a0 * grid.h), dtype=float))
                  for r in cols])
    if ball is not None:
        half = ball.shrink(0.5)
        for u in U:
            if not half.contains(u, BALL_SLACK):
                raise BallExit(
                    f"initial data {u} outside the half-radius ball; "
                    "the theory needs room for the solution to move")
    return build_level(model, grid, 0, U, a0, ball=ball)


# ---------------------------------------------------------------------------
# strips


@dataclass
class StripSolution:
    """Exact solution of the scheme on one strip [t_s, t_{s+1})."""

    model: SystemModel = field(repr=False)
    grid: StaggeredGrid = field(repr=False)
    level: LevelStates = field(repr=False)
    fan_cols: np.ndarray
    fans: list                   # WaveFan per fan column (None = null data)
    a_next: float
    sampled: np.ndarray          # (nf, n) states drawn at the random ray
    tau_left: np.ndarray         # (nf, n) strengths left of the ray
    tau_right: np.ndarray        # (nf, n) strengths right of it
    max_abs_speed: float

    @property
    def s(self):
        return self.level.s

    @property
    def t_lo(self):
        return self.level.t

    @property
    def t_hi(self):
        return self.level.t + self.grid.dt

    # -- profile access ----------------------------------------------------

    def _fan_index(self, x):
        """Index of the fan rectangle owning x (left-limit convention)."""
        if self.fan_cols.size == 0:
            return None
        f0 = int(self.fan_cols[0])
        j = math.ceil((x / self.grid.h - f0 - 1.0) / 2.0 - 1e-12)
        if j < 0 or j >= self.fan_cols.size:
            return None if j < 0 else self.fan_cols.size
        return j

    def evaluate(self, x, t=None):
        """Profile value(s) at position(s) x, time t in [t_lo, t_hi]."""
        if t is None:
            t = self.t_lo
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        n = self.level.U.shape[1]
        out = np.empty((xs.size, n))
        for i, xi in enumerate(xs):
            out[i] = self._evaluate_one(float(xi), float(t))
        return out[0] if np.isscalar(x) else out

    def _evaluate_one(self, x, t):
        j = self._fan_index(x)
        if j is None:
            return self.level.W[0]
        if j >= self.fan_cols.size:
            return self.level.V[-1]
        xr = self.grid.x_of(self.fan_cols[j])
        fan = self.fans[j]
        if fan is None:
            return self.level.V[j]
        if t <= self.t_lo:
            return fan.left if x <= xr else fan.right
        return sample_fan(fan, (x - xr) / (t - self.t_lo))

    # -- exact functionals ---------------------------------------------------

    def tv(self) -> float:
        """Total variation of the strip profile (1-norm over components).

        Counts every wave of every fan through its intermediate states plus
        the vertical jump segments at interior odd columns; constant in t
        across the strip.
        """
        total = 0.0
        for fan in self.fans:
            if fan is not None:
                total += float(np.sum(np.abs(np.diff(fan.states, axis=0))))
        V, W = self.level.V, self.level.W
        if V.shape[0] > 2:
            total += float(np.sum(np.abs(V[1:-1] - W[1:-1])))
        return total

    def sup_norm(self) -> float:
        worst = max(float(np.max(np.abs(self.level.V))),
                    float(np.max(np.abs(self.level.W))))
        for fan in self.fans:
            if fan is not None:
                worst = max(worst, float(np.max(np.abs(fan.states))))
        return worst

    def wave_data(self):
        """Wave arrays in the layout shared with the scalar strips."""
        from .riemann import CONTACT, NULL, RAREFACTION, SHOCK
        codes = {NULL: 0, SHOCK: 1, RAREFACTION: 2, CONTACT: 3}
        nf = self.fan_cols.size
        n = self.level.U.shape[1]
        tau = np.zeros((nf, n))
        kind = np.zeros((nf, n), dtype=np.int64)
        speed_lo = np.zeros((nf, n))
        speed_hi = np.zeros((nf, n))
        for k, fan in enumerate(self.fans):
            if fan is None:
                continue
            tau[k] = fan.strengths
            kind[k] = [codes[kd] for kd in fan.kinds]
            live = kind[k] != 0
            speed_lo[k, live] = fan.speed_lo[live]
            speed_hi[k, live] = fan.speed_hi[live]
        return {
            "fan_cols": self.fan_cols,
            "tau": tau,
            "kind": kind,
            "speed_lo": speed_lo,
            "speed_hi": speed_hi,
            "tau_left": self.tau_left,
            "tau_right": self.tau_right,
            "gnl": np.array([k == "gnl" for k in self.model.field_kinds]),
        }


def advance_strip(model, grid, seq, level, *, ball=None,
                  max_strength=DEFAULT_MAX_STRENGTH, guard=True):
    """One strip of the scheme: fans, random sampling, next level."""
    s, t = level.s, level.t
    cols = level.cols
    m = cols.size
    fan_cols = cols[:-1] + 1
    a_next = seq.sample(s + 1)
    xi = a_next * grid.lambda_cfl
    n = level.U.shape[1]

    fans = []
    sampled = np.empty((fan_cols.size, n))
    tau_left = np.zeros((fan_cols.size, n))
    tau_right = np.zeros((fan_cols.size, n))
    max_speed = 0.0
    guard_lo = grid.x_min + GUARD_CELLS * grid.h
    guard_hi = grid.x_max - GUARD_CELLS * grid.h

    for k in range(fan_cols.size):
        UL = level.V[k]
        UR = level.W[k + 1]
        x_f = grid.x_of(fan_cols[k])
        if np.array_equal(UL, UR):
            fans.append(None)
            sampled[k] = UL
            continue
        fan = solve_riemann(model, UL, UR, x_f, t, max_strength=max_strength)
        fans.append(fan)
        _check_ball(ball, fan.states, f"fan state at x={x_f:.6g}, level {s}")
        speed = fan.max_abs_speed()
        max_speed = max(max_speed, speed)
        if speed >= grid.lambda_cfl:
            raise CFLViolation(
                f"wave speed {speed:.6g} reached the mesh speed "
                f"{grid.lambda_cfl:.6g} at x={x_f:.6g}, level {s}")
        strength = float(np.sum(np.abs(fan.strengths)))
        if guard and strength > GUARD_STRENGTH and (x_f <= guard_lo or x_f >= guard_hi):
            raise BoundaryBreach(
                f"wave of strength {strength:.3g} within {GUARD_CELLS}h "
                f"of the boundary at x={x_f:.6g}, level {s}")
        state, tl, tr = split_fan(fan, xi)
        sampled[k] = state
        tau_left[k] = tl
        tau_right[k] = tr

    strip = StripSolution(model, grid, level, fan_cols, fans, a_next, sampled,
                          tau_left, tau_right, max_speed)

    next_cols = grid.columns(s + 1)
    U_next = np.empty((next_cols.size, n))
    for i, q in enumerate(next_cols):
        k = (int(q) - int(fan_cols[0])) // 2
        if 0 <= k < fan_cols.size:
            U_next[i] = sampled[k]
        elif k < 0:
            U_next[i] = level.U_hat[0]
        else:
            U_next[i] = level.U_hat[-1]
    next_level = build_level(model, grid, s + 1, U_next, a_next, ball=ball)
    return strip, next_level


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """Handle over a finished run: strips, levels, diagnostic reports."""

    model: SystemModel = field(repr=False)
    grid: StaggeredGrid
    seq: SamplingSequence
    t_final: float
    strips: list = field(repr=False)
    levels: Optional[list] = field(repr=False, default=None)
    reports: list = field(default_factory=list, repr=False)

    @property
    def n_strips(self):
        return len(self.strips)

    def strip_index(self, t) -> int:
        if t < 0.0 or t > self.t_final * (1.0 + 1e-12) + 1e-12:
            raise ValidationError(f"time {t} outside the computed range")
        return min(int(math.floor(t / self.grid.dt * (1.0 + 1e-12))),
                   self.n_strips - 1)

    def strip_for(self, t):
        strip = self.strips[self.strip_index(t)]
        if strip is None:
            raise ValidationError(f"strip at t={t} was not retained")
        return strip

    def evaluate(self, t, x):
        """Exact profile at time t on position(s) x."""
        return self.strip_for(t).evaluate(x, t)

    def final_level(self):
        return self.levels[-1] if self.levels else None


def run(model: SystemModel, grid: StaggeredGrid, seq: SamplingSequence,
        U0: Callable, t_final: float, monitors=(), *,
        ball: Optional[DomainBall] = None,
        max_strength: float = DEFAULT_MAX_STRENGTH,
        keep_levels: bool = False, guard: bool = True,
        snapshot_times=None, keep="auto",
        force_generic: bool = False) -> Trajectory:
    """March the scheme to t_final and return the trajectory.

    ``monitors`` are objects with on_strip(strip) and finish() hooks; the
    diagnostics engine plugs in here.  Scalar builtin systems are routed
    through the compiled strip kernels unless force_generic is set; the
    generic path is the reference implementation.  Long kernel runs drop
    strip records except at ``snapshot_times`` unless ``keep`` forces
    retention; the generic path always keeps every strip.
    """
    if not force_generic and _scalar_fast_applicable(model):
        from .scalar_run import run_scalar
        return run_scalar(model, grid, seq, U0, t_final, monitors,
                          ball=ball, max_strength=max_strength,
                          keep_levels=keep_levels, guard=guard,
                          snapshot_times=snapshot_times, keep=keep)

    n_strips = grid.strip_count(t_final)
    level = initial_level(model, grid, seq, U0, ball=ball)
    strips = []
    levels = [level] if keep_levels else None
    for _ in range(n_strips):
        strip, level = advance_strip(model, grid, seq, level, ball=ball,
                                     max_strength=max_strength, guard=guard)
        strips.append(strip)
        if keep_levels:
            levels.append(level)
        for mon in monitors:
            mon.on_strip(strip)
    for mon in monitors:
        mon.finish()
    traj = Trajectory(model, grid, seq, t_final, strips, levels)
    for mon in monitors:
        reports = getattr(mon, "reports", None)
        if reports is not None:
            traj.reports = reports
    return traj


def _scalar_fast_applicable(model) -> bool:
    return model.n == 1 and "a" in model.coeffs and model.name in (
        "burgers_inhom", "advection_var")


# ---------------------------------------------------------------------------
# classical random choice (homogeneous reference)


def classical_glimm_run(model, grid, seq, U0, t_final, *, ball=None,
                        max_strength=DEFAULT_MAX_STRENGTH):
    """Classical random choice for autonomous, source-free systems.

    Riemann problems are posed directly between neighbouring sampled states
    (no source split, no flux-level step).  Returns the list of level state
    arrays; the modified scheme must reproduce them bit for bit on
    homogeneous input.
    """
    if not (model.flux_is_autonomous and model.source_is_zero):
        raise ValidationError("classical reference needs F = F(U) and G = 0")
    a0 = seq.sample(0)
    cols = grid.columns(0)
    U = np.array([np.atleast_1d(np.asarray(U0(grid.x_of(r) + a0 * grid.h), dtype=float))
                  for r in cols])
    levels = [U.copy()]
    n_strips = grid.strip_count(t_final)
    for s in range(n_strips):
        t = grid.time_of(s)
        fan_cols = cols[:-1] + 1
        xi = seq.sample(s + 1) * grid.lambda_cfl
        sampled = np.empty((fan_cols.size, U.shape[1]))
        for k in range(fan_cols.size):
            UL, UR = U[k], U[k + 1]
            if np.array_equal(UL, UR):
                sampled[k] = UL
                continue
            fan = solve_riemann(model, UL, UR, grid.x_of(fan_cols[k]), t,
                                max_strength=max_strength)
            if fan.max_abs_speed() >= grid.lambda_cfl:
                raise CFLViolation("wave speed reached the mesh speed")
            _check_ball(ball, fan.states, "fan state")
            sampled[k] = sample_fan(fan, xi)
        next_cols = grid.columns(s + 1)
        U_next = np.empty((next_cols.size, U.shape[1]))
        for i, q in enumerate(next_cols):
            k = (int(q) - int(fan_cols[0])) // 2
            if 0 <= k < fan_cols.size:
                U_next[i] = sampled[k]
            elif k < 0:
                U_next[i] = U[0]
            else:
                U_next[i] = U[-1]
        cols = next_cols
        U = U_next
        levels.append(U.copy())
    return levels
