import numpy as np
import pytest

from glimmrcm.errors import BallExit, ValidationError
from glimmrcm.scheme import PiecewiseConstant, StaggeredGrid, run
from glimmrcm.sequence import SamplingSequence
from glimmrcm.system import DomainBall, builtin_system

VDC = SamplingSequence()
MODEL = builtin_system("burgers_inhom",
                       {"a_inf": 1.0, "eps": 0.05, "kappa": 0.05})
BUMP = PiecewiseConstant(np.array([-1.0, 0.0, 1.0]),
                         np.array([[1.0], [1.05], [0.95], [1.0]]))


def _grid(h=0.05, lam=2.0, lo=-15.0, hi=15.0):
    return StaggeredGrid(h=h, lambda_cfl=lam, x_min=lo, x_max=hi)


def test_dispatches_to_kernel_driver():
    traj = run(MODEL, _grid(), VDC, BUMP, 0.3)
    strip = traj.strip_for(0.1)
    assert type(strip).__name__ == "ScalarStrip"
    generic = run(MODEL, _grid(), VDC, BUMP, 0.3, force_generic=True)
    assert type(generic.strip_for(0.1)).__name__ == "StripSolution"


def test_strip_protocol_fields_consistent():
    traj = run(MODEL, _grid(), VDC, BUMP, 0.2)
    strip = traj.strip_for(0.1)
    wd = strip.wave_data()
    nf = wd["fan_cols"].size
    assert wd["tau"].shape == (nf, 1)
    assert wd["kind"].shape == (nf, 1)
    np.testing.assert_allclose(wd["tau_left"] + wd["tau_right"], wd["tau"],
                               atol=1e-14)
    assert wd["gnl"][0]                    # convex scalar flux
    assert strip.t_hi == pytest.approx(strip.t_lo + traj.grid.dt)


def test_evaluate_shapes_and_regions():
    traj = run(MODEL, _grid(), VDC, BUMP, 0.2)
    strip = traj.strip_for(0.15)
    xs = np.array([-14.0, -0.5, 0.5, 14.0])
    out = strip.evaluate(xs, 0.5 * (strip.t_lo + strip.t_hi))
    assert out.shape == (4, 1)
    one = strip.evaluate(-14.0)
    assert one.shape == (1,)
    np.testing.assert_allclose(one[0], out[0, 0])


def test_snapshot_strips_survive_memory_policy():
    traj = run(MODEL, _grid(h=0.1), VDC, BUMP, 0.4, keep=False,
               snapshot_times=[0.2, 0.4])
    assert traj.strip_for(0.2) is not None
    assert traj.strip_for(0.4) is not None
    with pytest.raises(ValidationError):
        traj.strip_for(0.1)                # dropped by the keep policy


def test_keep_true_retains_everything():
    traj = run(MODEL, _grid(h=0.1), VDC, BUMP, 0.4, keep=True)
    for s in range(traj.n_strips):
        assert traj.strips[s] is not None


def test_initial_data_must_fit_half_ball():
    with pytest.raises(BallExit):
        run(MODEL, _grid(), VDC, BUMP, 0.2,
            ball=DomainBall(np.array([1.0]), 0.09))
    traj = run(MODEL, _grid(), VDC, BUMP, 0.2,
               ball=DomainBall(np.array([1.0]), 0.5))
    assert traj.n_strips == _grid().strip_count(0.2)


def test_levels_match_between_paths():
    grid = _grid(h=0.1)
    fast = run(MODEL, grid, VDC, BUMP, 0.3, keep_levels=True)
    slow = run(MODEL, grid, VDC, BUMP, 0.3, keep_levels=True,
               force_generic=True)
    assert len(fast.levels) == len(slow.levels)
    for (r0, u), lvl in zip(fast.levels, slow.levels):
        assert r0 == lvl.cols[0]
        np.testing.assert_allclose(u, lvl.U[:, 0], atol=1e-11)


def test_final_time_on_level_boundary():
    grid = _grid(h=0.1)                     # dt = 0.05
    traj = run(MODEL, grid, VDC, BUMP, 0.25)
    out = traj.evaluate(0.25, np.array([0.0]))
    assert np.isfinite(out).all()
