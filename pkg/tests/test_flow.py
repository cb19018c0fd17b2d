import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from gyrepatrol import flow
from gyrepatrol.flow import (
    DoubleGyreFlow,
    DoubleGyreParams,
    ReciprocalProfile,
    VortexFlow,
    VortexParams,
)


def vortex(c=1.0, r0=0.0, power=1.0, mu=0.0, origin=(0.0, 0.0)):
    return VortexFlow(VortexParams(ReciprocalProfile(c, r0, power), mu), origin)


def rigid(omega=1.0):
    return VortexFlow(VortexParams(flow.rigid_profile(omega), 0.0))


# --- velocity fields -------------------------------------------------------


def test_double_gyre_vanishes_at_origin():
    v = flow.double_gyre_velocity(DoubleGyreParams(1.0, 1.0, 0.0), (0.0, 0.0))
    np.testing.assert_allclose(v, [0.0, 0.0], atol=1e-15)


def test_double_gyre_vanishes_at_cell_center():
    v = flow.double_gyre_velocity(DoubleGyreParams(1.0, 1.0, 0.0), (0.5, 0.5))
    np.testing.assert_allclose(v, [0.0, 0.0], atol=1e-15)


def test_double_gyre_dissipative_value():
    # sin(pi/4) cos(pi/4) = 1/2, so v = (-pi/2 - mu x1, pi/2 - mu x2)
    v = flow.double_gyre_velocity(DoubleGyreParams(1.0, 1.0, 0.1), (0.25, 0.25))
    np.testing.assert_allclose(v, [-1.5957963267948966, 1.5457963267948966], rtol=1e-14)


def test_vortex_zero_at_origin():
    p = VortexParams(ReciprocalProfile(1.0, 0.5, 1.0), 0.3)
    np.testing.assert_allclose(flow.vortex_velocity(p, (0.0, 0.0)), [0.0, 0.0])


def test_vortex_rigid_rotation():
    p = VortexParams(flow.rigid_profile(1.0), 0.0)
    np.testing.assert_allclose(flow.vortex_velocity(p, (1.0, 0.0)), [0.0, 1.0])


def test_vortex_reciprocal_with_dissipation():
    p = VortexParams(ReciprocalProfile(1.0), 0.05)
    np.testing.assert_allclose(flow.vortex_velocity(p, (2.0, 0.0)), [-0.1, 1.0], rtol=1e-14)


def test_vortex_batched_matches_pointwise():
    p = VortexParams(ReciprocalProfile(1.0, 0.2, 1.0), 0.01)
    pts = np.array([[1.0, 0.5], [-0.3, 2.0], [0.7, -0.7]])
    batched = flow.vortex_velocity(p, pts)
    for q, v in zip(pts, batched):
        np.testing.assert_allclose(flow.vortex_velocity(p, q), v)


# --- angular velocity ------------------------------------------------------


def test_angular_velocity_rigid():
    assert flow.angular_velocity(rigid(), (1.0, 0.0)) == pytest.approx(1.0)


def test_angular_velocity_reciprocal():
    assert flow.angular_velocity(vortex(), (0.0, 2.0)) == pytest.approx(0.5)


def test_angular_velocity_double_gyre():
    # v = (-pi sin(pi/2) cos(pi/4), pi cos(pi/2) sin(pi/4)) = (-pi/sqrt2, 0)
    # about (0.5, 0.5): d = (0, -0.25), so Omega = -d2 v1 / |d|^2 = -2 sqrt2 pi
    f = DoubleGyreFlow(DoubleGyreParams(1.0, 1.0, 0.0))
    w = flow.angular_velocity(f, (0.5, 0.25))
    assert w == pytest.approx(-2 * math.sqrt(2) * math.pi, rel=1e-13)


def test_angular_velocity_at_center_rejected():
    with pytest.raises(flow.DegeneratePointError):
        flow.angular_velocity(vortex(), (0.0, 0.0))


# --- periods ---------------------------------------------------------------


def test_period_rigid():
    assert flow.orbit_period(rigid(), 0.7) == pytest.approx(2 * math.pi, rel=1e-12)


def test_period_reciprocal():
    assert flow.orbit_period(vortex(), 2.0) == pytest.approx(4 * math.pi, rel=1e-12)


def _ode_period(f, r):
    """Integrate the non-dissipative field until the angle about the orbit origin wraps."""
    x0 = f.from_orbit(np.array([r]), np.array([0.0]))[0]
    o = f.orbit_origin

    def rhs(t, y):
        v = f.nondissipative_velocity(y[:2])
        d = y[:2] - o
        return [v[0], v[1], (d[0] * v[1] - d[1] * v[0]) / (d @ d)]

    # accumulate the angle directly so the event is a clean zero crossing
    def wrapped(t, y):
        return abs(y[2]) - 2 * math.pi

    wrapped.terminal = True
    sol = solve_ivp(rhs, (0, 100.0), [*x0, 0.0], events=wrapped, rtol=1e-12, atol=1e-13,
                    method="DOP853")
    assert sol.t_events[0].size == 1
    return sol.t_events[0][0], o


def test_period_double_gyre_matches_ode():
    f = DoubleGyreFlow(DoubleGyreParams(1.0, 1.0, 0.0))
    T_ode, _ = _ode_period(f, 0.2)
    assert flow.orbit_period(f, 0.2) == pytest.approx(T_ode, rel=1e-8)
    assert T_ode == pytest.approx(0.705803, abs=1e-6)


def test_period_double_gyre_clockwise_positive():
    f = DoubleGyreFlow(DoubleGyreParams(0.1, 1.0, 0.0))
    assert flow.rotation_sense(f, 0.2) == -1
    assert flow.orbit_period(f, 0.2) > 0


def test_period_detects_open_orbit():
    # rigid rotation with a counter-rotating core crossing zero is not closed
    class Split(VortexFlow):
        def nondissipative_velocity(self, x):
            x = flow.as_points(x)
            return np.stack([-x[..., 1] * np.sign(x[..., 1]), x[..., 0] * np.sign(x[..., 1])],
                            axis=-1)

    with pytest.raises(flow.OrbitError):
        flow.orbit_period(Split(VortexParams(flow.rigid_profile(1.0), 0.0)), 1.0)


def test_radius_for_period_inverts():
    f = vortex()
    r = flow.radius_for_period(f, 3 * math.pi, (1.0, 2.0))
    assert r == pytest.approx(1.5, abs=1e-9)


# --- monotone band ---------------------------------------------------------


def test_monotone_band_reciprocal_is_global():
    assert flow.monotone_band(vortex(), r_search=(0.1, 10.0)) == (0.1, 10.0)


def test_monotone_band_rigid_empty():
    assert flow.monotone_band(rigid(), r_search=(0.1, 10.0)) is None


def test_monotone_band_double_gyre_covers_cell():
    f = DoubleGyreFlow(DoubleGyreParams(1.0, 1.0, 0.0))
    band = flow.monotone_band(f, r_search=(0.01, 0.49))
    assert band == pytest.approx((0.01, 0.49))


# --- orbit coordinates and invariants ---------------------------------------


def test_double_gyre_stagnation_shifts_with_dissipation():
    f = DoubleGyreFlow(DoubleGyreParams(1.0, 1.0, 0.1))
    np.testing.assert_allclose(f.velocity(np.array(f.center.x_z)), [0, 0], atol=1e-12)
    assert f.center.x_z != f.center.x_o


@settings(max_examples=60, deadline=None)
@given(r=st.floats(0.01, 0.49), theta=st.floats(-math.pi, math.pi))
def test_double_gyre_orbit_round_trip(r, theta):
    f = DoubleGyreFlow(DoubleGyreParams(1.0, 1.0, 0.0))
    q = f.from_orbit(np.array([r]), np.array([theta]))
    r2, th2 = f.to_orbit(q)
    assert r2[0] == pytest.approx(r, abs=1e-8)
    assert math.cos(th2[0] - theta) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(r=st.floats(0.02, 0.48), theta=st.floats(0, 2 * math.pi))
def test_double_gyre_orbits_are_streamlines(r, theta):
    # the non-dissipative velocity is tangent to level sets of r
    f = DoubleGyreFlow(DoubleGyreParams(1.0, 1.0, 0.0))
    q = f.from_orbit(np.array([r]), np.array([theta]))[0]
    v = f.nondissipative_velocity(q)
    h = 1e-6
    dr = (f.to_orbit(q + h * v)[0] - f.to_orbit(q - h * v)[0]) / (2 * h)
    assert abs(float(dr)) < 1e-6


@settings(max_examples=50, deadline=None)
@given(c=st.floats(0.1, 5.0), r0=st.floats(0.0, 2.0), r=st.floats(0.1, 5.0))
def test_reciprocal_period_formula(c, r0, r):
    f = vortex(c, r0, 1.0)
    assert flow.orbit_period(f, r) == pytest.approx(2 * math.pi * (r + r0) / c, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(r1=st.floats(0.1, 5.0), r2=st.floats(0.1, 5.0), power=st.floats(0.2, 3.0))
def test_period_increases_in_decreasing_profile(r1, r2, power):
    lo, hi = sorted((r1, r2))
    if hi - lo < 1e-6:
        return
    f = vortex(1.0, 0.1, power)
    assert flow.orbit_period(f, lo) < flow.orbit_period(f, hi)


@settings(max_examples=40, deadline=None)
@given(x=st.floats(-3, 3), y=st.floats(-3, 3), mu=st.floats(0.001, 0.5))
def test_vortex_dissipation_is_radial(x, y, mu):
    # the dissipative part only changes |x|: it points inward for mu > 0
    if math.hypot(x, y) < 1e-3:
        return
    f = vortex(mu=mu)
    dv = f.velocity((x, y)) - f.nondissipative_velocity((x, y))
    np.testing.assert_allclose(dv, [-mu * x, -mu * y], atol=1e-12)


def test_points_must_be_pairs():
    with pytest.raises(ValueError):
        flow.vortex_velocity(VortexParams(ReciprocalProfile()), (1.0, 2.0, 3.0))
