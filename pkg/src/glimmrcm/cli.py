"""Command line front end.

Verbs: ``run`` (march the scheme, write snapshots / diagnostics /
manifest), ``study`` (mesh-refinement error table against a reference),
``audit`` (hypothesis margins over the configured ball), ``print-config``
(normalized echo of the effective configuration).  Exit codes: 0 success,
2 configuration problem, 3 numerical failure, 4 theory-regime breach.
"""

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import dump_config, parse_config
from .diagnostics import InteractionMonitor, check_theorem_bounds
from .errors import GlimmError, ParseError, ValidationError, exit_code_for
from .kernels import active_backend
from .oracle import (characteristics_linear, fine_grid_reference,
                     ode_reference, scalar_riemann_exact)
from .scheme import StaggeredGrid, run
from .system import audit_assumptions

ORACLE_NAMES = ("exact", "characteristics", "ode", "fine_grid")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="glimmrcm",
        description="Random choice solver for 1D hyperbolic balance laws "
                    "with flux-level inhomogeneity handling and runtime "
                    "interaction diagnostics.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="YAML config path")
        p.add_argument("--h", type=float, default=None,
                       help="override grid.h")
        p.add_argument("--t-final", type=float, default=None,
                       help="override time.t_final")
        p.add_argument("--seed", type=int, default=None,
                       help="override sequence.seed")
        p.add_argument("--output", default=None,
                       help="override output.directory")

    p_run = sub.add_parser("run", help="march the scheme and write outputs")
    common(p_run)
    p_run.add_argument("--compare-oracle", choices=ORACLE_NAMES, default=None,
                       help="also report errors against this reference")
    p_run.set_defaults(func=_cmd_run)

    p_study = sub.add_parser(
        "study", help="error vs mesh width against a reference solution")
    common(p_study)
    p_study.add_argument("--h-list", required=True,
                         help="comma-separated mesh widths, e.g. 0.02,0.01")
    p_study.add_argument("--compare-oracle", choices=ORACLE_NAMES,
                         default="fine_grid",
                         help="reference used for the error column")
    p_study.set_defaults(func=_cmd_study)

    p_audit = sub.add_parser(
        "audit", help="check the structural hypotheses over the data ball")
    common(p_audit)
    p_audit.set_defaults(func=_cmd_audit)

    p_print = sub.add_parser(
        "print-config", help="echo the validated, normalized configuration")
    common(p_print)
    p_print.set_defaults(func=_cmd_print_config)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except GlimmError as exc:
        code = exit_code_for(exc)
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        out_dir = getattr(args, "_out_dir", None)
        if out_dir is not None:
            _write_failure(out_dir, exc, code)
        return code


# ---------------------------------------------------------------------------
# config loading with flag overrides


def _load_config(args):
    """Parse the YAML file with flag overrides applied before validation."""
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config file: {exc}") from exc
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed config document: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("config document must be a key tree")
    if args.h is not None:
        raw.setdefault("grid", {})["h"] = args.h
    if args.t_final is not None:
        raw.setdefault("time", {})["t_final"] = args.t_final
    if args.seed is not None:
        raw.setdefault("sequence", {})["seed"] = args.seed
    if args.output is not None:
        raw.setdefault("output", {})["directory"] = args.output
    return parse_config(yaml.safe_dump(raw))


def _prepare_output(args, cfg):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    args._out_dir = out
    return out


# ---------------------------------------------------------------------------
# serialization helpers


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj)}")


def _write_json(path, payload):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2,
                               default=_jsonable) + "\n")


def _write_failure(out_dir, exc, code):
    record = {"error": type(exc).__name__, "exit_code": code,
              "message": str(exc)}
    try:
        _write_json(Path(out_dir) / "failure.json", record)
    except OSError:                      # pragma: no cover - disk trouble
        pass


def _fmt(v):
    """Shortest round-trip decimal form; deterministic across runs."""
    return repr(float(v))


def _snapshot_grid(cfg):
    step = cfg.grid.h / cfg.points_per_h
    m = int(round((cfg.grid.x_max - cfg.grid.x_min) / step))
    xs = cfg.grid.x_min + step * np.arange(m + 1)
    xs[-1] = cfg.grid.x_max          # keep the endpoint free of rounding
    return xs


def _write_snapshots(path, cfg, traj):
    xs = _snapshot_grid(cfg)
    n = cfg.model.n
    header = "t,x," + ",".join(f"U{i + 1}" for i in range(n))
    lines = [header]
    for ts in sorted(cfg.snapshot_times):
        states = np.atleast_2d(traj.evaluate(ts, xs))
        for x, U in zip(xs, states):
            lines.append(_fmt(ts) + "," + _fmt(x) + ","
                         + ",".join(_fmt(v) for v in U))
    path.write_text("\n".join(lines) + "\n")


def _write_reports(path, reports):
    with path.open("w") as fh:
        for rep in reports:
            fh.write(json.dumps(rep.to_dict(), sort_keys=True,
                                default=_jsonable) + "\n")


def _manifest(cfg, traj=None, bounds=None, extra=None):
    payload = {
        "tool": "glimmrcm",
        "version": __version__,
        "backend": active_backend(),
        "config": cfg.normalized,
    }
    if traj is not None:
        payload["n_strips"] = traj.n_strips
    if bounds is not None:
        payload["bounds"] = bounds
    if extra:
        payload.update(extra)
    return payload


# ---------------------------------------------------------------------------
# reference solutions built from a config


def _build_oracle(cfg, name, *, h_for_reference=None):
    """Reference evaluator for the configured problem.

    exact            scalar autonomous source-free Riemann data;
    characteristics  linear scalar flux (advection_var);
    ode              spatially constant data, source only;
    fine_grid        the scheme itself at mesh width h/8.
    """
    model = cfg.model
    init = cfg.initial
    if name == "exact":
        if model.n != 1 or not model.flux_is_autonomous \
                or not model.source_is_zero:
            raise ValidationError(
                "exact reference needs a scalar autonomous flux and no source")
        if init.values.shape[0] != 2:
            raise ValidationError("exact reference needs two-state data")
        x0 = float(init.breakpoints[0])

        def flux(u):
            return float(np.atleast_1d(
                model.flux(np.array([u]), 0.0, 0.0))[0])

        def dflux(u):
            return float(np.asarray(
                model.jacobian(np.array([u]), 0.0, 0.0))[0, 0])

        base = scalar_riemann_exact(flux, float(init.values[0, 0]),
                                    float(init.values[1, 0]), dflux=dflux)
        if x0 == 0.0:
            return base
        return _shifted(base, x0)
    if name == "characteristics":
        if model.n != 1 or "a" not in model.coeffs \
                or model.field_kinds[0] != "ld":
            raise ValidationError(
                "characteristics reference needs the linear scalar flux")

        def g(u, x, t):
            return float(np.atleast_1d(model.source(np.array([u]), x, t))[0])

        return characteristics_linear(model.coeffs["a"], g, init,
                                      a_x=model.coeffs["a_x"],
                                      step=min(1e-3, cfg.grid.dt / 4.0))
    if name == "ode":
        if init.tv() != 0.0:
            raise ValidationError(
                "ode reference needs spatially constant data")

        def source(U, t):
            return model.source(U, 0.0, t)

        return ode_reference(source, init.values[0],
                             step=min(1e-3, cfg.grid.dt / 4.0))
    if name == "fine_grid":
        h = cfg.grid.h if h_for_reference is None else h_for_reference

        def make_trajectory(h_ref):
            grid = StaggeredGrid(h=h_ref, lambda_cfl=cfg.grid.lambda_cfl,
                                 x_min=cfg.grid.x_min, x_max=cfg.grid.x_max)
            times = sorted(set(cfg.snapshot_times) | {cfg.t_final})
            return run(cfg.model, grid, cfg.seq, cfg.initial, cfg.t_final,
                       ball=cfg.ball, max_strength=cfg.max_strength,
                       snapshot_times=times)

        return fine_grid_reference(make_trajectory, h, h / 8.0)
    raise ValidationError(f"unknown reference {name!r}")


def _shifted(oracle, x0):
    from .oracle import OracleSolution
    return OracleSolution(lambda x, t: oracle.evaluator(x - x0, t),
                          oracle.t_range,
                          (oracle.x_range[0], oracle.x_range[1]),
                          oracle.provenance)


def _l1_error(cfg, traj, oracle, ts, max_points=4097):
    """L1 distance between the run profile and the reference at time ts.

    The quadrature grid is capped so reference evaluators with per-point
    ODE integrations stay affordable; the cap is deterministic.
    """
    xs = _snapshot_grid(cfg)
    if xs.size > max_points:
        idx = np.round(np.linspace(0, xs.size - 1, max_points)).astype(int)
        xs = xs[idx]
    approx = np.atleast_2d(traj.evaluate(ts, xs))
    exact = np.atleast_2d(oracle(xs, ts))
    gap = np.abs(approx - exact).sum(axis=1)
    return float(np.trapezoid(gap, xs))


# ---------------------------------------------------------------------------
# verbs


def _cmd_run(args):
    cfg = _load_config(args)
    out = _prepare_output(args, cfg)
    monitors = []
    mon = None
    if cfg.diagnostics_enabled:
        mon = InteractionMonitor(cfg.diagnostics)
        monitors.append(mon)
    traj = run(cfg.model, cfg.grid, cfg.seq, cfg.initial, cfg.t_final,
               monitors, ball=cfg.ball, max_strength=cfg.max_strength,
               guard=True, snapshot_times=cfg.snapshot_times)

    if "csv" in cfg.output_formats:
        _write_snapshots(out / "snapshots.csv", cfg, traj)
    bounds = None
    if mon is not None:
        if "jsonl" in cfg.output_formats:
            _write_reports(out / "diagnostics.jsonl", traj.reports)
        bounds = check_theorem_bounds(traj.reports, cfg.diagnostics)
    oracle_summary = None
    if args.compare_oracle:
        oracle = _build_oracle(cfg, args.compare_oracle)
        rows = [(ts, _l1_error(cfg, traj, oracle, ts))
                for ts in sorted(cfg.snapshot_times)]
        lines = ["t,l1_error"] + [f"{_fmt(t)},{_fmt(e)}" for t, e in rows]
        (out / "oracle.csv").write_text("\n".join(lines) + "\n")
        oracle_summary = {"name": args.compare_oracle,
                          "l1_error": {_fmt(t): e for t, e in rows}}

    _write_json(out / "manifest.json",
                _manifest(cfg, traj, bounds,
                          {"oracle": oracle_summary} if oracle_summary else None))
    msg = f"run complete: {traj.n_strips} strips, backend {active_backend()}"
    if bounds is not None:
        verdict = "inside" if bounds["passed"] else "OUTSIDE"
        msg += (f", max TV {bounds['max_tv']:.6g} ({verdict} the bound), "
                f"max functional {bounds['max_G']:.6g}")
    print(msg)
    print(f"outputs in {out}")
    return 0


def _cmd_study(args):
    cfg = _load_config(args)
    out = _prepare_output(args, cfg)
    try:
        h_list = [float(tok) for tok in args.h_list.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad --h-list: {exc}") from exc
    if not h_list:
        raise ValidationError("--h-list must name at least one mesh width")
    if any(h <= 0 for h in h_list):
        raise ValidationError("mesh widths must be positive")
    h_list = sorted(h_list, reverse=True)

    oracle = _build_oracle(cfg, args.compare_oracle,
                           h_for_reference=min(h_list))
    ts = cfg.t_final
    rows, failures = [], []
    for h in h_list:
        try:
            grid = StaggeredGrid(h=h, lambda_cfl=cfg.grid.lambda_cfl,
                                 x_min=cfg.grid.x_min, x_max=cfg.grid.x_max)
            traj = run(cfg.model, grid, cfg.seq, cfg.initial, cfg.t_final,
                       ball=cfg.ball, max_strength=cfg.max_strength,
                       snapshot_times=[ts])
            sub = dataclasses.replace(cfg, grid=grid)
            rows.append((h, _l1_error(sub, traj, oracle, ts)))
        except GlimmError as exc:
            failures.append({"h": h, "error": type(exc).__name__,
                             "message": str(exc)})
            print(f"h={h}: {type(exc).__name__}: {exc}", file=sys.stderr)

    lines = ["h,error,order"]
    prev = None
    for h, err in rows:
        order = ""
        if prev is not None and err > 0.0 and prev[1] > 0.0 and prev[0] != h:
            order = _fmt(math.log(prev[1] / err) / math.log(prev[0] / h))
        lines.append(f"{_fmt(h)},{_fmt(err)},{order}")
        prev = (h, err)
    (out / "study.csv").write_text("\n".join(lines) + "\n")
    _write_json(out / "manifest.json",
                _manifest(cfg, None, None, {
                    "study": {"h_list": h_list,
                              "reference": args.compare_oracle,
                              "failures": failures}}))
    print("\n".join(lines))
    print(f"study table in {out / 'study.csv'}")
    return 3 if failures and not rows else 0


def _cmd_audit(args):
    cfg = _load_config(args)
    if cfg.profile is None:
        raise ValidationError("audit needs an assumptions section")
    if cfg.ball is None:
        raise ValidationError("audit needs a ball section")
    report = audit_assumptions(cfg.model, cfg.profile, cfg.ball)
    width = max(len(c.key) for c in report.checks)
    print(f"hypothesis audit: system {report.model_name}, ball radius "
          f"{report.ball_radius} at {report.ball_center}")
    for c in report.checks:
        state = "pass" if c.passed else "FAIL"
        print(f"  {c.key:<{width}}  margin {c.margin:+.6g}  {state}  "
              f"({c.threshold})")
    out_dir = args.output or None
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        args._out_dir = out
        _write_json(out / "audit.json", {
            "model": report.model_name,
            "ball": {"center": report.ball_center,
                     "radius": report.ball_radius},
            "passed": report.passed,
            "checks": [c.to_dict() for c in report.checks],
        })
    if report.passed:
        print("all hypotheses hold on the sampled ball")
        return 0
    print("one or more hypotheses FAIL on the sampled ball", file=sys.stderr)
    return 4


def _cmd_print_config(args):
    cfg = _load_config(args)
    sys.stdout.write(dump_config(cfg))
    return 0


if __name__ == "__main__":          # pragma: no cover
    sys.exit(main())
