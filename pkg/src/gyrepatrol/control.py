"""Radial bang-bang patrol controllers, the waypoint baseline and the
forced-pendulum thruster model.

Headings are absolute angles in the tank frame. Radial thrust "outward" is
along the ray from the gyre center through the robot (heading ``theta``),
"inward" is the opposite direction (``theta + pi``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from gyrepatrol.flow import GyreCenter, TWO_PI


def _wrap(a: float) -> float:
    a = a % TWO_PI
    return 0.0 if a >= TWO_PI else a


DEFAULT_EPSILON = 0.05
# forced-pendulum swimmer at K = 15 N m, omega = 2 pi rad/s
MEAN_THRUST = 0.021  # N
TOP_SPEED = 0.093  # m/s, still water


@dataclass(frozen=True)
class AnnulusRegion:
    r_lower: float
    r_upper: float
    center: GyreCenter = GyreCenter.single((0.0, 0.0))
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.r_lower < 0:
            raise ValueError("r_lower must be non-negative")
        if self.r_upper - self.r_lower < self.epsilon:
            raise ValueError(
                f"band width {self.r_upper - self.r_lower:g} m below epsilon {self.epsilon:g} m"
            )

    def contains(self, r) -> np.ndarray:
        return (np.asarray(r) > self.r_lower) & (np.asarray(r) < self.r_upper)


@dataclass(frozen=True)
class ControlCommand:
    u: float
    theta_r: float

    @property
    def active(self) -> bool:
        return self.u > 0


@dataclass(frozen=True)
class BangBangConfig:
    region: AnnulusRegion
    u_max: float
    mode: str = "three-state"  # or "hysteresis"
    speed_range: tuple[float, float] | None = None

    def __post_init__(self):
        if self.u_max <= 0:
            raise ValueError("u_max must be positive")
        if self.mode not in ("three-state", "hysteresis"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.speed_range is not None:
            lo, hi = self.speed_range
            if not (0 <= lo < hi <= self.u_max):
                raise ValueError("speed_range must satisfy 0 <= lo < hi <= u_max")


def bang_bang(cfg: BangBangConfig, r: float, theta: float) -> ControlCommand:
    """Three-state radial law: push out below the band, in above it, coast inside."""
    if r < 0:
        raise ValueError("r must be non-negative")
    reg = cfg.region
    if r <= reg.r_lower:
        return ControlCommand(cfg.u_max, _wrap(theta))
    if r >= reg.r_upper:
        return ControlCommand(cfg.u_max, _wrap(theta + math.pi))
    return ControlCommand(0.0, _wrap(theta))


def bang_bang_hysteresis(cfg: BangBangConfig, r: float, theta: float, prev_active: bool,
                         speed: float, push: int = -1) -> tuple[ControlCommand, bool]:
    """Latched one-sided law. Returns the command and the new latch state.

    With ``push=-1`` the latch engages at the outer bound and thrusts inward
    until the inner bound; ``push=+1`` mirrors this for inward-drifting flows.
    ``speed`` is the magnitude applied while latched.
    """
    reg = cfg.region
    active = prev_active
    if push < 0:
        if not active and r >= reg.r_upper:
            active = True
        elif active and r <= reg.r_lower:
            active = False
        heading = theta + math.pi if active else theta
    else:
        if not active and r <= reg.r_lower:
            active = True
        elif active and r >= reg.r_upper:
            active = False
        heading = theta
    return ControlCommand(speed if active else 0.0, _wrap(heading)), active


def waypoint_command(q, waypoints, index: int, capture_radius: float,
                     u_max: float) -> tuple[ControlCommand, int]:
    """Direct pursuit of ``waypoints[index]``; advances once when captured."""
    wp = np.asarray(waypoints, dtype=float)
    dx, dy = wp[index] - q
    if dx * dx + dy * dy <= capture_radius * capture_radius:
        index = (index + 1) % len(wp)
        dx, dy = wp[index] - q
    return ControlCommand(u_max, _wrap(math.atan2(dy, dx))), index


# ----------------------------------------------------------------------------
# stateful controllers used by the integrator
#
# ``command(t, q, r, theta)`` is called once per step with the robot position
# and its orbit coordinates. ``kernel_spec(n)`` exports the controller to the
# compiled loop and ``kernel_sync`` writes back the final state.


class Controller:
    def command(self, t: float, q, r: float, theta: float) -> ControlCommand:
        raise NotImplementedError

    def kernel_spec(self, n: int):
        return None

    def kernel_sync(self, latch: bool, index: int) -> None:
        pass


class NoControl(Controller):
    def command(self, t, q, r, theta):
        return ControlCommand(0.0, _wrap(theta))

    def kernel_spec(self, n):
        from gyrepatrol import _fast

        return _fast.CTRL_NONE, np.zeros(3), _fast.NO_CENTERS, _fast.NO_WEIGHTS, False, 0


class ConstantThrust(Controller):
    def __init__(self, u: float, theta_r: float):
        self.u = float(u)
        self.theta_r = float(theta_r)

    def command(self, t, q, r, theta):
        return ControlCommand(self.u, _wrap(self.theta_r))

    def kernel_spec(self, n):
        from gyrepatrol import _fast

        return (_fast.CTRL_CONSTANT, np.array([self.u, _wrap(self.theta_r), 0.0]),
                _fast.NO_CENTERS, _fast.NO_WEIGHTS, False, 0)


class BangBang(Controller):
    def __init__(self, cfg: BangBangConfig):
        self.cfg = cfg

    def command(self, t, q, r, theta):
        return bang_bang(self.cfg, r, theta)

    def kernel_spec(self, n):
        from gyrepatrol import _fast

        reg = self.cfg.region
        cp = np.array([reg.r_lower, reg.r_upper, self.cfg.u_max])
        return _fast.CTRL_BANG_BANG, cp, _fast.NO_CENTERS, _fast.NO_WEIGHTS, False, 0


class HysteresisBangBang(Controller):
    """Latched controller whose thrust magnitude is redrawn uniformly each step.

    One draw is consumed per ``command`` call, active or not, so a seed fixes
    the whole command sequence.
    """

    def __init__(self, cfg: BangBangConfig, seed: int | None = 0, push: int = -1,
                 active: bool = False):
        if cfg.speed_range is None:
            raise ValueError("hysteresis mode needs speed_range")
        if push not in (-1, 1):
            raise ValueError("push must be -1 (inward) or +1 (outward)")
        self.cfg = cfg
        self.push = push
        self.active = active
        self.rng = np.random.default_rng(seed)

    def command(self, t, q, r, theta):
        lo, hi = self.cfg.speed_range
        speed = self.rng.uniform(lo, hi)
        cmd, self.active = bang_bang_hysteresis(self.cfg, r, theta, self.active, speed, self.push)
        return cmd

    def kernel_spec(self, n):
        from gyrepatrol import _fast

        reg = self.cfg.region
        lo, hi = self.cfg.speed_range
        draws = self.rng.uniform(lo, hi, size=n)
        cp = np.array([reg.r_lower, reg.r_upper, float(self.push)])
        return _fast.CTRL_HYSTERESIS, cp, _fast.NO_CENTERS, draws, self.active, 0

    def kernel_sync(self, latch, index):
        self.active = bool(latch)


class WaypointController(Controller):
    """Naive still-water baseline: always at full thrust toward the next waypoint."""

    def __init__(self, waypoints, capture_radius: float, u_max: float, start: int = 0):
        wp = np.asarray(waypoints, dtype=float).reshape(-1, 2)
        if len(wp) < 2:
            raise ValueError("need at least 2 waypoints")
        if u_max <= 0 or capture_radius <= 0:
            raise ValueError("u_max and capture_radius must be positive")
        self.waypoints = wp
        self.capture_radius = float(capture_radius)
        self.u_max = float(u_max)
        self.index = int(start)

    def command(self, t, q, r, theta):
        cmd, self.index = waypoint_command(np.asarray(q, float), self.waypoints, self.index,
                                           self.capture_radius, self.u_max)
        return cmd

    def kernel_spec(self, n):
        from gyrepatrol import _fast

        cp = np.array([self.capture_radius, self.u_max, 0.0])
        return (_fast.CTRL_WAYPOINT, cp, np.ascontiguousarray(self.waypoints),
                _fast.NO_WEIGHTS, False, self.index)

    def kernel_sync(self, latch, index):
        self.index = int(index)


def orbit_waypoints(flow, r: float, spacing: float = 0.5, ccw: bool = True,
                    samples: int = 2048) -> np.ndarray:
    """Waypoints every ``spacing`` metres of arc along the orbit of radius ``r``."""
    theta = np.linspace(0, TWO_PI, samples, endpoint=False)
    pts = flow.from_orbit(np.full(samples, float(r)), theta)
    seg = np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    n = max(2, int(round(s[-1] / spacing)))
    targets = np.arange(n) * s[-1] / n
    idx = np.searchsorted(s, targets, side="right") - 1
    out = pts[idx % samples]
    return out if ccw else out[::-1]


# ----------------------------------------------------------------------------
# forced-pendulum swimmer


@dataclass(frozen=True)
class PendulumParams:
    K: float = 15.0
    omega: float = TWO_PI
    mean_thrust: float = MEAN_THRUST
    beta: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.beta is None:
            object.__setattr__(self, "beta", self.omega ** 2)
        if not math.isclose(self.beta, self.omega ** 2, rel_tol=1e-12):
            raise ValueError("beta must equal omega**2 (resonance)")

    @property
    def tau(self) -> float:
        return TWO_PI / self.omega


def pendulum_torque(p: PendulumParams, t, theta, theta_r):
    return -p.K * np.sin(p.omega * np.asarray(t)) - p.beta * np.sin(
        np.asarray(theta_r) - np.asarray(theta))


def averaged_thruster(p: PendulumParams, cmd: ControlCommand) -> np.ndarray:
    """Cycle-averaged thrust force (N): ``mean_thrust`` along ``theta_r`` when active."""
    if not cmd.active:
        return np.zeros(2)
    return p.mean_thrust * np.array([math.cos(cmd.theta_r), math.sin(cmd.theta_r)])


def linear_drag(thrust: float = MEAN_THRUST, top_speed: float = TOP_SPEED) -> float:
    """Drag coefficient (N s/m) giving ``top_speed`` under ``thrust`` in still water."""
    return thrust / top_speed
