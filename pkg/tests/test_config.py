import numpy as np
import pytest
import yaml

from glimmrcm.config import dump_config, parse_config
from glimmrcm.errors import ParseError, ValidationError

BASE = {
    "system": {"name": "burgers_inhom",
               "params": {"a_inf": 1.0, "eps": 0.05, "kappa": 0.05}},
    "grid": {"h": 0.05, "lambda_cfl": 2.0, "x_min": -15.0, "x_max": 15.0},
    "time": {"t_final": 1.0},
}


def make(**overrides):
    doc = {sec: dict(body) for sec, body in BASE.items()}
    for sec, body in overrides.items():
        if body is None:
            doc.pop(sec, None)
        elif sec in doc:
            doc[sec] = {**doc[sec], **body}
        else:
            doc[sec] = body
    return yaml.safe_dump(doc)


# ---------------------------------------------------------------------------
# defaults and happy path


def test_minimal_config_fills_defaults():
    cfg = parse_config(make())
    assert cfg.model.name == "burgers_inhom"
    assert cfg.grid.h == 0.05 and cfg.grid.lambda_cfl == 2.0
    assert cfg.snapshot_times == [1.0]
    assert cfg.seq.kind == "van_der_corput" and cfg.seq.seed == 0
    assert cfg.ball is None and cfg.profile is None
    assert cfg.diagnostics_enabled is True
    assert cfg.diagnostics.c0 == 5.0 and cfg.diagnostics.c1 == 2.0
    assert cfg.max_strength == 0.5
    assert cfg.output_dir == "out"
    assert cfg.output_formats == ["csv", "jsonl"]
    assert cfg.points_per_h == 4
    # default initial data is a trivial constant
    assert cfg.initial.tv() == 0.0


def test_initial_riemann_kind():
    cfg = parse_config(make(initial={"kind": "riemann", "left": 1.0,
                                     "right": 0.5, "x0": 0.25}))
    np.testing.assert_array_equal(cfg.initial.breakpoints, [0.25])
    np.testing.assert_array_equal(cfg.initial.values, [[1.0], [0.5]])
    assert cfg.diagnostics.tv_u0 == pytest.approx(0.5)


def test_initial_piecewise_constant_kind():
    cfg = parse_config(make(initial={
        "kind": "piecewise_constant",
        "breakpoints": [-1.0, 0.0, 1.0],
        "values": [1.0, 1.1, 0.9, 1.0]}))
    assert cfg.initial.values.shape == (4, 1)
    assert cfg.initial.tv() == pytest.approx(0.4)


def test_initial_constant_kind():
    cfg = parse_config(make(initial={"kind": "constant", "value": 0.7}))
    assert cfg.initial.tv() == 0.0
    assert cfg.initial.sup_norm() == pytest.approx(0.7)


def test_snapshot_times_validated():
    cfg = parse_config(make(time={"t_final": 1.0,
                                  "snapshot_times": [0.2, 1.0]}))
    assert cfg.snapshot_times == [0.2, 1.0]
    with pytest.raises(ValidationError):
        parse_config(make(time={"t_final": 1.0, "snapshot_times": [1.5]}))


# ---------------------------------------------------------------------------
# strict schema


def test_unknown_section_rejected():
    with pytest.raises(ParseError, match="unknown config sections"):
        parse_config(make(physics={"c": 1.0}))


def test_unknown_key_rejected():
    with pytest.raises(ParseError, match="unknown keys in grid"):
        parse_config(make(grid={"dx": 0.05}))


def test_malformed_yaml_rejected():
    with pytest.raises(ParseError):
        parse_config("system: {name: [unclosed")
    with pytest.raises(ParseError, match="key tree"):
        parse_config("- a\n- b\n")
    with pytest.raises(ParseError, match="must be a mapping"):
        parse_config("system: hello\ngrid: {}\ntime: {}\n")


def test_missing_required_fields():
    with pytest.raises(ValidationError, match="system.name"):
        parse_config(make(system=None))
    with pytest.raises(ValidationError, match="grid.h"):
        parse_config(yaml.safe_dump({
            "system": BASE["system"],
            "grid": {"lambda_cfl": 2.0, "x_min": -1.0, "x_max": 1.0},
            "time": {"t_final": 1.0}}))
    with pytest.raises(ValidationError, match="t_final"):
        parse_config(make(time=None))


def test_scalar_type_checks():
    with pytest.raises(ValidationError):
        parse_config(make(grid={"h": "wide"}))
    with pytest.raises(ValidationError):
        parse_config(make(grid={"h": -0.05}))
    with pytest.raises(ValidationError):
        parse_config(make(grid={"lambda_cfl": True}))
    with pytest.raises(ValidationError, match="seed"):
        parse_config(make(sequence={"kind": "prng", "seed": 1.5}))
    with pytest.raises(ValidationError):
        parse_config(make(sequence={"kind": "sobol"}))
    with pytest.raises(ValidationError, match="points_per_h"):
        parse_config(make(output={"points_per_h": 0}))
    with pytest.raises(ValidationError, match="formats"):
        parse_config(make(output={"formats": ["parquet"]}))
    with pytest.raises(ValidationError, match="max_strength"):
        parse_config(make(limits={"max_strength": 0.0}))


def test_initial_shape_checks():
    with pytest.raises(ValidationError, match="components"):
        parse_config(make(system={"name": "p_system",
                                  "params": {"gamma": 2.0}},
                          initial={"kind": "riemann", "left": [1.0],
                                   "right": [1.0]}))
    with pytest.raises(ValidationError, match="breakpoints"):
        parse_config(make(initial={"kind": "piecewise_constant",
                                   "values": [1.0, 2.0]}))
    with pytest.raises(ValidationError, match="initial.kind"):
        parse_config(make(initial={"kind": "sine"}))


# ---------------------------------------------------------------------------
# static regime checks against the audited ball


def test_cfl_speed_must_cover_the_ball():
    good = make(ball={"center": 1.0, "radius": 0.5})
    assert parse_config(good).ball is not None
    with pytest.raises(ValidationError, match="lambda_cfl"):
        parse_config(make(ball={"center": 1.0, "radius": 0.5},
                          grid={"lambda_cfl": 1.0}))


def test_domain_must_cover_wave_travel():
    with pytest.raises(ValidationError, match="x_max"):
        parse_config(make(ball={"center": 1.0, "radius": 0.5},
                          grid={"x_max": 1.0}))
    # negative states move left, so the margin lands on x_min instead
    with pytest.raises(ValidationError, match="x_min"):
        parse_config(make(ball={"center": -1.0, "radius": 0.5},
                          initial={"kind": "constant", "value": -1.0},
                          grid={"x_min": -1.0}))


def test_degenerate_states_inside_ball_rejected():
    with pytest.raises(ValidationError, match="degenerates"):
        parse_config(make(system={"name": "p_system",
                                  "params": {"gamma": 2.0}},
                          grid={"lambda_cfl": 50.0},
                          ball={"center": [0.1, 0.0], "radius": 0.5},
                          initial={"kind": "constant", "value": [0.1, 0.0]}))


def test_ball_component_count():
    with pytest.raises(ValidationError, match="components"):
        parse_config(make(ball={"center": [1.0, 0.0], "radius": 0.5}))


# ---------------------------------------------------------------------------
# assumption profiles


def test_assumption_profile_defaults():
    cfg = parse_config(make(assumptions={"A_const": 10.0, "omega": 0.3}))
    assert cfg.profile is not None
    assert cfg.profile.omega == 0.3
    assert cfg.profile.phi_name.startswith("sech2")
    assert cfg.profile.psi_name.startswith("exp")
    assert cfg.diagnostics.omega == 0.3


def test_assumption_profile_kinds():
    cfg = parse_config(make(assumptions={
        "omega": 0.3,
        "phi": {"kind": "gaussian", "amplitude": 0.05, "width": 2.0},
        "psi": {"kind": "power", "p": 2.0}}))
    assert cfg.profile.phi_name.startswith("gaussian")
    assert cfg.profile.psi_name == "power(p=2)"
    with pytest.raises(ValidationError, match="phi.kind"):
        parse_config(make(assumptions={"phi": {"kind": "tent"}}))
    with pytest.raises(ValidationError, match="psi.kind"):
        parse_config(make(assumptions={"psi": {"kind": "log"}}))
    with pytest.raises(ValidationError, match="exceed 1"):
        parse_config(make(assumptions={"psi": {"kind": "power", "p": 1.0}}))


def test_profile_budget_enforced():
    # a huge envelope amplitude blows the integral budget
    with pytest.raises(ValidationError):
        parse_config(make(assumptions={
            "omega": 0.3, "phi": {"kind": "sech2", "amplitude": 10.0}}))


# ---------------------------------------------------------------------------
# normalized echo


def test_dump_is_idempotent():
    text = make(ball={"center": 1.0, "radius": 0.5},
                assumptions={"A_const": 10.0, "omega": 0.3},
                initial={"kind": "riemann", "left": 1.2, "right": 1.0},
                sequence={"kind": "prng", "seed": 42},
                time={"t_final": 1.0, "snapshot_times": [0.5, 1.0]})
    first = dump_config(parse_config(text))
    second = dump_config(parse_config(first))
    assert first == second
    doc = yaml.safe_load(first)
    assert doc["initial"]["kind"] == "piecewise_constant"
    assert doc["sequence"] == {"kind": "prng", "seed": 42}
    assert doc["assumptions"]["phi"] == {"kind": "sech2", "amplitude": 0.135}
    assert doc["assumptions"]["psi"] == {"kind": "exp", "rate": 1.0}


def test_normalized_echo_contains_every_section():
    cfg = parse_config(make())
    assert set(cfg.normalized) == {"system", "grid", "time", "sequence",
                                   "initial", "diagnostics", "limits",
                                   "output"}
    cfg = parse_config(make(ball={"center": 1.0, "radius": 0.5},
                            assumptions={"omega": 0.3}))
    assert "ball" in cfg.normalized and "assumptions" in cfg.normalized
