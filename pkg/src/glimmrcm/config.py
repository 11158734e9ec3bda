"""Run configuration: YAML schema, strict validation, normalized dumps.

The document is a key tree with sections system / grid / time / sequence /
ball / initial / assumptions / diagnostics / limits / output.  Unknown
keys are rejected so typos cannot silently fall back to defaults; the
normalized dump echoes every effective value and feeds the run manifest,
making reruns reproducible from the manifest alone.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .diagnostics import DiagnosticsConfig
from .errors import NumericalError, ParseError, ValidationError
from .scheme import PiecewiseConstant, StaggeredGrid
from .sequence import SamplingSequence
from .system import (AssumptionProfile, DomainBall, SystemModel,
                     builtin_system, default_plan, make_profile)

_SECTIONS = {
    "system": {"name", "params"},
    "grid": {"h", "lambda_cfl", "x_min", "x_max"},
    "time": {"t_final", "snapshot_times"},
    "sequence": {"kind", "seed"},
    "ball": {"center", "radius"},
    "initial": {"kind", "left", "right", "x0", "breakpoints", "values",
                "value"},
    "assumptions": {"A_const", "omega", "phi", "psi"},
    "diagnostics": {"enabled", "C0", "C1", "C2", "sigma_prefactor"},
    "limits": {"max_strength"},
    "output": {"directory", "formats", "points_per_h"},
}


def _require(cond, message):
    if not cond:
        raise ValidationError(message)


def _as_float(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{key} must be a number, got {value!r}")
    return float(value)


def _as_vector(value, key):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return np.array([float(value)])
    if isinstance(value, (list, tuple)) and value and all(
            isinstance(v, (int, float)) and not isinstance(v, bool)
            for v in value):
        return np.array([float(v) for v in value])
    raise ValidationError(f"{key} must be a number or list of numbers")


@dataclass
class RunConfig:
    """Validated run parameters plus the objects built from them."""

    model: SystemModel = field(repr=False)
    grid: StaggeredGrid
    seq: SamplingSequence
    t_final: float
    snapshot_times: list
    ball: Optional[DomainBall]
    initial: PiecewiseConstant = field(repr=False)
    profile: Optional[AssumptionProfile] = field(repr=False)
    diagnostics: DiagnosticsConfig
    diagnostics_enabled: bool
    max_strength: float
    output_dir: str
    output_formats: list
    points_per_h: int
    normalized: dict = field(repr=False)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML config document."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ParseError(f"malformed config document{where}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ParseError("config document must be a key tree")

    unknown = set(raw) - set(_SECTIONS)
    if unknown:
        raise ParseError(f"unknown config sections: {sorted(unknown)}")
    for sec, keys in _SECTIONS.items():
        body = raw.get(sec)
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ParseError(f"section {sec} must be a mapping")
        extra = set(body) - keys
        if extra:
            raise ParseError(f"unknown keys in {sec}: {sorted(extra)}")

    # system ---------------------------------------------------------------
    sys_sec = raw.get("system") or {}
    name = sys_sec.get("name")
    _require(isinstance(name, str) and name, "system.name is required")
    params = sys_sec.get("params") or {}
    _require(isinstance(params, dict), "system.params must be a mapping")
    model = builtin_system(name, params)

    # grid -------------------------------------------------------------------
    grid_sec = raw.get("grid") or {}
    for key in ("h", "lambda_cfl", "x_min", "x_max"):
        _require(key in grid_sec, f"grid.{key} is required")
    h = _as_float(grid_sec["h"], "grid.h")
    _require(h > 0.0, "grid.h must be positive")
    lam = _as_float(grid_sec["lambda_cfl"], "grid.lambda_cfl")
    _require(lam > 0.0, "grid.lambda_cfl must be positive")
    grid = StaggeredGrid(h=h, lambda_cfl=lam,
                         x_min=_as_float(grid_sec["x_min"], "grid.x_min"),
                         x_max=_as_float(grid_sec["x_max"], "grid.x_max"))

    # time -------------------------------------------------------------------
    time_sec = raw.get("time") or {}
    _require("t_final" in time_sec, "time.t_final is required")
    t_final = _as_float(time_sec["t_final"], "time.t_final")
    _require(t_final >= 0.0, "time.t_final must be nonnegative")
    snaps = time_sec.get("snapshot_times")
    if snaps is None:
        snaps = [t_final]
    _require(isinstance(snaps, (list, tuple)),
             "time.snapshot_times must be a list")
    snapshot_times = [_as_float(ts, "time.snapshot_times[]") for ts in snaps]
    for ts in snapshot_times:
        _require(0.0 <= ts <= t_final,
                 f"snapshot time {ts} outside [0, t_final]")

    # sequence ---------------------------------------------------------------
    seq_sec = raw.get("sequence") or {}
    kind = seq_sec.get("kind", "van_der_corput")
    seed = seq_sec.get("seed", 0)
    _require(isinstance(seed, int) and not isinstance(seed, bool),
             "sequence.seed must be an integer")
    try:
        seq = SamplingSequence(kind=kind, seed=seed)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc

    # ball ---------------------------------------------------------------
    ball_sec = raw.get("ball")
    ball = None
    if ball_sec:
        _require("center" in ball_sec and "radius" in ball_sec,
                 "ball needs center and radius")
        center = _as_vector(ball_sec["center"], "ball.center")
        _require(center.size == model.n,
                 f"ball.center must have {model.n} components")
        ball = DomainBall(center, _as_float(ball_sec["radius"], "ball.radius"))

    # initial ---------------------------------------------------------------
    init_sec = raw.get("initial") or {}
    initial = _parse_initial(init_sec, model.n)

    # static wave-speed sanity checks against the audited ball ----------------
    if ball is not None:
        try:
            lam_lo, lam_hi = _speed_range(model, ball.shrink(0.5))
        except NumericalError as exc:
            raise ValidationError(
                f"ball contains states where the system degenerates: {exc}"
            ) from exc
        _require(lam < math.inf and lam > max(abs(lam_lo), abs(lam_hi)),
                 f"grid.lambda_cfl = {lam} must exceed the audited wave-speed "
                 f"sup {max(abs(lam_lo), abs(lam_hi)):.6g} over the data ball")
        support_lo = float(initial.breakpoints[0])
        support_hi = float(initial.breakpoints[-1])
        margin_l = max(0.0, -lam_lo) * t_final
        margin_r = max(0.0, lam_hi) * t_final
        _require(grid.x_min <= support_lo - margin_l,
                 f"grid.x_min = {grid.x_min} must sit below the initial "
                 f"support minus the wave-travel margin {margin_l:.6g}")
        _require(grid.x_max >= support_hi + margin_r,
                 f"grid.x_max = {grid.x_max} must sit above the initial "
                 f"support plus the wave-travel margin {margin_r:.6g}")

    # assumptions ---------------------------------------------------------
    asm_sec = raw.get("assumptions")
    profile, asm_norm = None, None
    if asm_sec:
        omega_p = _as_float(asm_sec.get("omega", 0.3), "assumptions.omega")
        A_const = _as_float(asm_sec.get("A_const", 10.0),
                            "assumptions.A_const")
        phi, phi_name, phi_spec = _parse_phi(asm_sec.get("phi"), omega_p)
        psi, psi_name, psi_spec = _parse_psi(asm_sec.get("psi"))
        profile = make_profile(A_const=A_const, omega=omega_p, phi=phi,
                               psi=psi, phi_name=phi_name, psi_name=psi_name)
        asm_norm = {"A_const": A_const, "omega": omega_p,
                    "phi": phi_spec, "psi": psi_spec}

    # diagnostics ---------------------------------------------------------
    diag_sec = raw.get("diagnostics") or {}
    enabled = bool(diag_sec.get("enabled", True))
    omega = profile.omega if profile is not None else 0.3
    psi_l1 = profile.psi_l1 if profile is not None else 1.0
    diag = DiagnosticsConfig(
        c0=_as_float(diag_sec.get("C0", 5.0), "diagnostics.C0"),
        c1=_as_float(diag_sec.get("C1", 2.0), "diagnostics.C1"),
        c2=_as_float(diag_sec.get("C2", 2.0), "diagnostics.C2"),
        sigma_prefactor=_as_float(diag_sec.get("sigma_prefactor", 0.0),
                                  "diagnostics.sigma_prefactor"),
        omega=omega, psi_l1=psi_l1,
        tv_u0=initial.tv(), sup_u0=initial.sup_norm())

    # limits / output ------------------------------------------------------
    lim_sec = raw.get("limits") or {}
    max_strength = _as_float(lim_sec.get("max_strength", 0.5),
                             "limits.max_strength")
    _require(max_strength > 0.0, "limits.max_strength must be positive")
    out_sec = raw.get("output") or {}
    out_dir = out_sec.get("directory", "out")
    _require(isinstance(out_dir, str) and out_dir, "output.directory invalid")
    formats = out_sec.get("formats", ["csv", "jsonl"])
    _require(isinstance(formats, (list, tuple)) and
             set(formats) <= {"csv", "jsonl"},
             "output.formats must be a sublist of [csv, jsonl]")
    pph = out_sec.get("points_per_h", 4)
    _require(isinstance(pph, int) and not isinstance(pph, bool) and pph >= 1,
             "output.points_per_h must be a positive integer")

    normalized = _normalized_dict(
        model, grid, seq, t_final, snapshot_times, ball, initial,
        asm_norm, enabled, diag, max_strength, out_dir, formats, pph)
    return RunConfig(model=model, grid=grid, seq=seq, t_final=t_final,
                     snapshot_times=snapshot_times, ball=ball,
                     initial=initial, profile=profile, diagnostics=diag,
                     diagnostics_enabled=enabled, max_strength=max_strength,
                     output_dir=out_dir, output_formats=list(formats),
                     points_per_h=pph, normalized=normalized)


def _parse_initial(init_sec, n):
    kind = init_sec.get("kind", "riemann")
    if kind == "riemann":
        left = _as_vector(init_sec.get("left", [1.0] * n), "initial.left")
        right = _as_vector(init_sec.get("right", [1.0] * n), "initial.right")
        _require(left.size == n and right.size == n,
                 f"initial states must have {n} components")
        x0 = _as_float(init_sec.get("x0", 0.0), "initial.x0")
        return PiecewiseConstant(np.array([x0]), np.array([left, right]))
    if kind == "piecewise_constant":
        _require("breakpoints" in init_sec and "values" in init_sec,
                 "piecewise_constant initial data needs breakpoints and values")
        bp = [_as_float(b, "initial.breakpoints[]")
              for b in init_sec["breakpoints"]]
        vals = [list(np.atleast_1d(_as_vector(v, "initial.values[]")))
                for v in init_sec["values"]]
        arr = np.array(vals, dtype=float)
        _require(arr.ndim == 2 and arr.shape[1] == n,
                 f"initial.values rows must have {n} components")
        return PiecewiseConstant(np.array(bp), arr)
    if kind == "constant":
        value = _as_vector(init_sec.get("value", [1.0] * n), "initial.value")
        _require(value.size == n, f"initial.value must have {n} components")
        return PiecewiseConstant(np.array([0.0]), np.array([value, value]))
    raise ValidationError(f"unknown initial.kind {kind!r}")


def _parse_phi(spec, omega):
    """Spatial envelope spec -> (callable, label, normalized spec).

    Supported kinds: ``sech2`` with ``amplitude`` (default 0.45*omega so the
    integral 2*amplitude stays inside the omega budget) and ``gaussian``
    with ``amplitude``/``width``.
    """
    if spec is None:
        spec = {}
    if not isinstance(spec, dict):
        raise ValidationError("assumptions.phi must be a mapping")
    kind = spec.get("kind", "sech2")
    if kind == "sech2":
        amp = _as_float(spec.get("amplitude", 0.45 * omega),
                        "assumptions.phi.amplitude")

        def phi(x):
            e = np.exp(-np.abs(x))          # overflow-free sech^2
            s = 2.0 * e / (1.0 + e * e)
            return amp * s * s

        return (phi, f"sech2(amplitude={amp:.6g})",
                {"kind": "sech2", "amplitude": amp})
    if kind == "gaussian":
        amp = _as_float(spec.get("amplitude", omega / 4.0),
                        "assumptions.phi.amplitude")
        width = _as_float(spec.get("width", 1.0), "assumptions.phi.width")

        def phi(x):
            return amp * np.exp(-0.5 * (x / width) ** 2)

        return (phi, f"gaussian(amplitude={amp:.6g}, width={width:.6g})",
                {"kind": "gaussian", "amplitude": amp, "width": width})
    raise ValidationError(f"unknown assumptions.phi.kind {kind!r}")


def _parse_psi(spec):
    """Temporal decay spec -> (callable, label, normalized spec).

    Supported kinds: ``exp`` with ``rate`` (default 1) and ``power`` with
    exponent ``p`` > 1, psi(t) = (1+t)^-p.
    """
    if spec is None:
        spec = {}
    if not isinstance(spec, dict):
        raise ValidationError("assumptions.psi must be a mapping")
    kind = spec.get("kind", "exp")
    if kind == "exp":
        rate = _as_float(spec.get("rate", 1.0), "assumptions.psi.rate")
        _require(rate > 0.0, "assumptions.psi.rate must be positive")

        def psi(t):
            return np.exp(-rate * t)

        return psi, f"exp(rate={rate:.6g})", {"kind": "exp", "rate": rate}
    if kind == "power":
        p = _as_float(spec.get("p", 2.0), "assumptions.psi.p")
        _require(p > 1.0, "assumptions.psi.p must exceed 1 for integrability")

        def psi(t):
            return (1.0 + t) ** (-p)

        return psi, f"power(p={p:.6g})", {"kind": "power", "p": p}
    raise ValidationError(f"unknown assumptions.psi.kind {kind!r}")


def _speed_range(model, ball):
    """Min/max characteristic speed over a sample of the ball and window."""
    from .system import eigen_decompose
    plan = default_plan(ball)
    lo, hi = math.inf, -math.inf
    for U in plan.states:
        for x in plan.x_grid[:: max(1, plan.x_grid.size // 9)]:
            for t in plan.t_grid[:: max(1, plan.t_grid.size // 5)]:
                lams = eigen_decompose(model, U, float(x), float(t)).lambdas
                lo = min(lo, float(lams[0]))
                hi = max(hi, float(lams[-1]))
    return lo, hi


def _normalized_dict(model, grid, seq, t_final, snapshot_times, ball,
                     initial, asm_norm, enabled, diag,
                     max_strength, out_dir, formats, pph):
    doc = {
        "system": {"name": model.name, "params": dict(model.params)},
        "grid": {"h": grid.h, "lambda_cfl": grid.lambda_cfl,
                 "x_min": grid.x_min, "x_max": grid.x_max},
        "time": {"t_final": t_final, "snapshot_times": list(snapshot_times)},
        "sequence": {"kind": seq.kind, "seed": seq.seed},
        "initial": {
            "kind": "piecewise_constant",
            "breakpoints": [float(b) for b in initial.breakpoints],
            "values": [[float(v) for v in row] for row in initial.values],
        },
        "diagnostics": {"enabled": enabled, "C0": diag.c0, "C1": diag.c1,
                        "C2": diag.c2,
                        "sigma_prefactor": diag.sigma_prefactor},
        "limits": {"max_strength": max_strength},
        "output": {"directory": out_dir, "formats": list(formats),
                   "points_per_h": pph},
    }
    if ball is not None:
        doc["ball"] = {"center": [float(c) for c in ball.center],
                       "radius": ball.radius}
    if asm_norm is not None:
        doc["assumptions"] = asm_norm
    return doc


def dump_config(cfg: RunConfig) -> str:
    """Normalized YAML echo of a parsed config."""
    return yaml.safe_dump(cfg.normalized, sort_keys=True,
                          default_flow_style=False)
