import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gyrepatrol import control, dynamics
from gyrepatrol.control import (
    AnnulusRegion,
    BangBangConfig,
    ControlCommand,
    HysteresisBangBang,
    PendulumParams,
    WaypointController,
)
from gyrepatrol.flow import ZeroFlow

REGION = AnnulusRegion(1.0, 2.0)
CFG = BangBangConfig(REGION, 0.04)
HYST = BangBangConfig(REGION, 0.04, "hysteresis", (0.01, 0.04))


def test_bang_bang_idle_in_band():
    cmd = control.bang_bang(CFG, 1.5, 0.3)
    assert cmd.u == 0 and not cmd.active


def test_bang_bang_outward_at_lower_bound():
    cmd = control.bang_bang(CFG, 1.0, 0.3)
    assert cmd.u == 0.04
    assert cmd.theta_r == pytest.approx(0.3)


def test_bang_bang_inward_at_upper_bound():
    cmd = control.bang_bang(CFG, 2.0, 0.3)
    assert cmd.u == 0.04
    assert cmd.theta_r == pytest.approx(0.3 + math.pi)


def test_region_width_below_epsilon_rejected():
    with pytest.raises(ValueError):
        AnnulusRegion(1.0, 1.0)
    with pytest.raises(ValueError):
        AnnulusRegion(1.0, 1.04, epsilon=0.05)


def test_hysteresis_engages_above_band():
    cmd, active = control.bang_bang_hysteresis(HYST, 2.1, 0.0, False, 0.025)
    assert active and cmd.u == 0.025
    assert cmd.theta_r == pytest.approx(math.pi)


def test_hysteresis_releases_below_band():
    cmd, active = control.bang_bang_hysteresis(HYST, 0.9, 0.0, True, 0.025)
    assert not active and cmd.u == 0


def test_hysteresis_idle_in_band():
    cmd, active = control.bang_bang_hysteresis(HYST, 1.5, 0.0, False, 0.025)
    assert not active and cmd.u == 0


def test_hysteresis_latch_holds_in_band():
    cmd, active = control.bang_bang_hysteresis(HYST, 1.5, 0.0, True, 0.025)
    assert active and cmd.u == 0.025


def test_hysteresis_outward_variant_mirrors():
    cmd, active = control.bang_bang_hysteresis(HYST, 0.9, 1.0, False, 0.02, push=1)
    assert active and cmd.theta_r == pytest.approx(1.0)
    _, active = control.bang_bang_hysteresis(HYST, 2.0, 1.0, True, 0.02, push=1)
    assert not active


def test_hysteresis_speeds_in_range_and_seeded():
    a = HysteresisBangBang(HYST, seed=3)
    b = HysteresisBangBang(HYST, seed=3)
    ua = [a.command(0, (2.5, 0), 2.5, 0.0).u for _ in range(200)]
    ub = [b.command(0, (2.5, 0), 2.5, 0.0).u for _ in range(200)]
    assert ua == ub
    assert all(0.01 <= u <= 0.04 for u in ua)
    assert len(set(ua)) > 100


def test_speed_range_must_fit_u_max():
    with pytest.raises(ValueError):
        BangBangConfig(REGION, 0.03, "hysteresis", (0.01, 0.04))


@settings(max_examples=100, deadline=None)
@given(r=st.floats(0.0, 5.0), theta=st.floats(-10, 10))
def test_bang_bang_pushes_toward_band(r, theta):
    cmd = control.bang_bang(CFG, r, theta)
    e = np.array([math.cos(cmd.theta_r), math.sin(cmd.theta_r)])
    radial = e @ np.array([math.cos(theta), math.sin(theta)])
    if r <= 1.0:
        assert cmd.active and radial > 0.999
    elif r >= 2.0:
        assert cmd.active and radial < -0.999
    else:
        assert not cmd.active
    assert 0 <= cmd.theta_r < 2 * math.pi


def test_waypoint_advances_on_capture():
    wps = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)]
    cmd, idx = control.waypoint_command(np.array([0.95, 0.0]), wps, 0, 0.1, 0.05)
    assert idx == 1
    assert cmd.theta_r == pytest.approx(math.atan2(1.0, -0.95) % (2 * math.pi))


def test_waypoint_never_idle():
    c = WaypointController([(1.0, 0.0), (-1.0, 0.0)], 0.1, 0.05)
    for q in [(0, 0), (5, 5), (1.0, 0.0)]:
        assert c.command(0.0, np.array(q, float), 0.0, 0.0).u == 0.05


def test_waypoint_loop_in_still_water():
    wps = np.array([(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)])
    c = WaypointController(wps, 0.05, 0.1)
    traj = dynamics.integrate(ZeroFlow(), c, (1.0, 0.0), 200.0, dt=0.05)
    visits = [np.min(np.linalg.norm(traj.pos - w, axis=1)) for w in wps]
    assert max(visits) < 0.05
    # about 5.66 m per lap at 0.1 m/s gives several laps
    assert len(dynamics.detect_cycles(traj)) >= 2


def test_orbit_waypoints_evenly_spaced():
    wps = control.orbit_waypoints(ZeroFlow(), 1.0, spacing=0.5)
    assert len(wps) == round(2 * math.pi / 0.5)
    np.testing.assert_allclose(np.linalg.norm(wps, axis=1), 1.0, atol=1e-12)


def test_pendulum_zero():
    assert control.pendulum_torque(PendulumParams(), 0.0, 0.7, 0.7) == pytest.approx(0.0)


def test_pendulum_quarter_period():
    assert control.pendulum_torque(PendulumParams(), 0.25, 0.0, 0.0) == pytest.approx(-15.0)


@settings(max_examples=50, deadline=None)
@given(t=st.floats(0, 100), th=st.floats(-4, 4), thr=st.floats(-4, 4))
def test_pendulum_formula_and_period(t, th, thr):
    p = PendulumParams(K=15.0, omega=2 * math.pi)
    expected = -15.0 * math.sin(2 * math.pi * t) - (2 * math.pi) ** 2 * math.sin(thr - th)
    assert control.pendulum_torque(p, t, th, thr) == pytest.approx(expected, abs=1e-9)
    assert control.pendulum_torque(p, t + p.tau, th, thr) == pytest.approx(expected, abs=1e-9)


def test_pendulum_requires_resonance():
    with pytest.raises(ValueError):
        PendulumParams(beta=1.0)


def test_averaged_thruster_idle():
    np.testing.assert_array_equal(control.averaged_thruster(PendulumParams(),
                                                            ControlCommand(0.0, 1.0)), [0, 0])


def test_averaged_thruster_active():
    f = control.averaged_thruster(PendulumParams(), ControlCommand(0.02, 0.0))
    np.testing.assert_allclose(f, [0.021, 0.0])


def test_linear_drag_gives_top_speed():
    assert control.MEAN_THRUST / control.linear_drag() == pytest.approx(0.093)
