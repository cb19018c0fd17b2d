"""Analytic gyre-like flow fields and orbit-level analysis.

Every field maps physical positions to *orbit coordinates* ``(r, theta)``:
``theta`` is the angle about the field's orbit origin and ``r`` is constant
along each closed orbit of the non-dissipative part of the field. For the
vortex this is plain polar form; for the double gyre it is derived from the
stream function; the fitted racetrack field (see :mod:`gyrepatrol.geometry`)
uses the circle map.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

TWO_PI = 2.0 * math.pi


class FlowDomainError(ValueError):
    """A field or map was evaluated outside its domain."""


class DegeneratePointError(FlowDomainError):
    """An angle was requested at the center it is measured about."""


class OrbitError(ValueError):
    """The angular velocity vanishes or changes sign along an orbit."""


def as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError(f"expected trailing dimension 2, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite coordinates")
    return x


def wrap_angle(theta):
    """Angle in [0, 2 pi); tiny negative inputs would otherwise round up to 2 pi."""
    a = np.mod(theta, TWO_PI)
    return np.where(a >= TWO_PI, 0.0, a)


@dataclass(frozen=True)
class GyreCenter:
    x_o: tuple[float, float]
    x_z: tuple[float, float]

    @classmethod
    def single(cls, point) -> "GyreCenter":
        p = (float(point[0]), float(point[1]))
        return cls(p, p)


# ----------------------------------------------------------------------------
# angular velocity profiles for the vortex model


@dataclass(frozen=True)
class ReciprocalProfile:
    """``Omega(r) = c / (r + r0) ** power``; ``power=0`` is rigid rotation."""

    c: float = 1.0
    r0: float = 0.0
    power: float = 1.0

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("profile scale c must be positive")
        if self.power < 0:
            raise ValueError("power must be >= 0 (profile may not increase with r)")

    @property
    def domain(self) -> tuple[float, float]:
        return (max(0.0, -self.r0), math.inf)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.power == 0:
            return np.full_like(r, self.c)
        with np.errstate(divide="ignore"):
            return self.c / (r + self.r0) ** self.power


def rigid_profile(omega: float = 1.0) -> ReciprocalProfile:
    return ReciprocalProfile(c=omega, r0=0.0, power=0.0)


@dataclass(frozen=True)
class DoubleGyreParams:
    A: float = 0.1
    s: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        if self.A <= 0 or self.s <= 0 or self.mu < 0:
            raise ValueError("double gyre needs A > 0, s > 0, mu >= 0")


@dataclass(frozen=True)
class VortexParams:
    omega_profile: Callable = ReciprocalProfile()
    mu: float = 0.0
    domain: tuple[float, float] | None = None

    @property
    def r_domain(self) -> tuple[float, float]:
        if self.domain is not None:
            return self.domain
        return getattr(self.omega_profile, "domain", (0.0, math.inf))


def double_gyre_velocity(p: DoubleGyreParams, x) -> np.ndarray:
    x = as_points(x)
    x1, x2 = x[..., 0], x[..., 1]
    k = math.pi / p.s
    v1 = -math.pi * p.A * np.sin(k * x1) * np.cos(k * x2) - p.mu * x1
    v2 = math.pi * p.A * np.cos(k * x1) * np.sin(k * x2) - p.mu * x2
    return np.stack([v1, v2], axis=-1)


def vortex_velocity(p: VortexParams, x, origin=(0.0, 0.0)) -> np.ndarray:
    x = as_points(x) - np.asarray(origin, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    lo, hi = p.r_domain
    nonzero = r > 0
    if np.any(nonzero & ((r < lo) | (r > hi))):
        raise FlowDomainError(f"radius outside profile domain {p.r_domain}")
    omega = np.where(nonzero, p.omega_profile(np.where(nonzero, r, 1.0)), 0.0)
    v1 = -omega * x[..., 1] - p.mu * x[..., 0]
    v2 = omega * x[..., 0] - p.mu * x[..., 1]
    return np.stack([v1, v2], axis=-1)


# ----------------------------------------------------------------------------
# field objects


class FlowField:
    """Evaluable 2-D velocity field with a gyre center and orbit coordinates.

    Subclasses implement ``velocity``, ``nondissipative_velocity``,
    ``to_orbit`` and ``from_orbit``. ``kernel_spec`` optionally exposes the
    field to the compiled integrator; ``None`` means Python stepping only.
    """

    center: GyreCenter

    @property
    def orbit_origin(self) -> np.ndarray:
        return np.asarray(self.center.x_o, dtype=float)

    def velocity(self, x) -> np.ndarray:
        raise NotImplementedError

    def nondissipative_velocity(self, x) -> np.ndarray:
        raise NotImplementedError

    def to_orbit(self, x) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def from_orbit(self, r, theta) -> np.ndarray:
        raise NotImplementedError

    def kernel_spec(self):
        return None

    def __call__(self, x):
        return self.velocity(x)


class VortexFlow(FlowField):
    def __init__(self, params: VortexParams, origin=(0.0, 0.0)):
        self.params = params
        self.center = GyreCenter.single(origin)
        self._origin = np.asarray(origin, dtype=float)

    def velocity(self, x):
        return vortex_velocity(self.params, x, self._origin)

    def nondissipative_velocity(self, x):
        return vortex_velocity(
            VortexParams(self.params.omega_profile, 0.0, self.params.domain), x, self._origin
        )

    def to_orbit(self, x):
        d = as_points(x) - self._origin
        return np.hypot(d[..., 0], d[..., 1]), wrap_angle(np.arctan2(d[..., 1], d[..., 0]))

    def from_orbit(self, r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return self._origin + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)

    def kernel_spec(self):
        prof = self.params.omega_profile
        if type(prof) is not ReciprocalProfile or self.params.domain is not None:
            return None
        from gyrepatrol import _fast

        fp = np.array([prof.c, prof.r0, prof.power, self.params.mu, *self._origin])
        mp = np.array([*self._origin])
        return _fast.FLOW_VORTEX, fp, _fast.NO_CENTERS, _fast.NO_WEIGHTS, _fast.MAP_POLAR, mp


class ZeroFlow(VortexFlow):
    """Still water; orbit coordinates are polar about ``origin``."""

    def __init__(self, origin=(0.0, 0.0)):
        super().__init__(VortexParams(rigid_profile(1.0), 0.0), origin)

    def velocity(self, x):
        return np.zeros_like(as_points(x))

    def kernel_spec(self):
        from gyrepatrol import _fast

        fp = np.array([0.0, 0.0, 0.0, 0.0, *self._origin])
        return _fast.FLOW_VORTEX, fp, _fast.NO_CENTERS, _fast.NO_WEIGHTS, _fast.MAP_POLAR, fp[4:].copy()


class DoubleGyreFlow(FlowField):
    """Simplified wind-driven double gyre, restricted to the cell ``(0, s)^2``.

    Orbit coordinates come from the stream function
    ``psi = sin(pi x1 / s) sin(pi x2 / s)``: ``r = (s / pi) arccos(psi)``,
    which equals the distance from the cell center along the ``theta = 0``
    ray. Streamlines of the non-dissipative field are exactly the level sets
    of ``r``.
    """

    def __init__(self, params: DoubleGyreParams):
        self.params = params
        s = params.s
        x_o = (0.5 * s, 0.5 * s)
        self.center = GyreCenter(x_o, tuple(self._stagnation(x_o)))

    def _stagnation(self, guess):
        if self.params.mu == 0:
            return guess
        from scipy.optimize import fsolve

        sol, info, ok, msg = fsolve(lambda p: self.velocity(p), guess, full_output=True, xtol=1e-13)
        if np.hypot(*info["fvec"]) > 1e-10:
            raise OrbitError(f"no stagnation point near the cell center: {msg}")
        return float(sol[0]), float(sol[1])

    @property
    def r_limit(self) -> float:
        return 0.5 * self.params.s

    def velocity(self, x):
        return double_gyre_velocity(self.params, x)

    def nondissipative_velocity(self, x):
        p = self.params
        return double_gyre_velocity(DoubleGyreParams(p.A, p.s, 0.0), x)

    def stream(self, x):
        x = as_points(x)
        k = math.pi / self.params.s
        return np.sin(k * x[..., 0]) * np.sin(k * x[..., 1])

    def to_orbit(self, x):
        x = as_points(x)
        d = x - self.orbit_origin
        psi = np.clip(self.stream(x), -1.0, 1.0)
        r = self.params.s / math.pi * np.arccos(psi)
        return r, wrap_angle(np.arctan2(d[..., 1], d[..., 0]))

    def from_orbit(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        if np.any((r < 0) | (r > self.r_limit)):
            raise FlowDomainError(f"orbit radius outside [0, {self.r_limit}]")
        s = self.params.s
        target = np.cos(math.pi * r / s)
        e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        rho_hi = 0.5 * s / np.maximum(np.abs(e[..., 0]), np.abs(e[..., 1]))
        # psi decreases monotonically along rays inside the cell
        rho = ray_bisect(lambda q: target - self.stream(q), self.orbit_origin, e,
                         np.zeros_like(rho_hi), rho_hi)
        return self.orbit_origin + rho[..., None] * e

    def kernel_spec(self):
        from gyrepatrol import _fast

        p = self.params
        fp = np.array([p.A, p.s, p.mu])
        mp = np.array([*self.orbit_origin, p.s])
        return _fast.FLOW_DOUBLE_GYRE, fp, _fast.NO_CENTERS, _fast.NO_WEIGHTS, _fast.MAP_STREAM, mp


def ray_bisect(h, origin, e, lo, hi, tol=1e-10, max_iter=200):
    """Vectorized bisection for ``h(origin + rho e) = 0`` with ``h(lo) < 0 <= h(hi)``."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(max_iter):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        val = h(origin + mid[..., None] * e)
        below = val < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


# ----------------------------------------------------------------------------
# orbit analysis


def angular_velocity(f: FlowField, x) -> np.ndarray:
    """Angular rate of the flow about the dissipative center ``x_z``.

    Positive values mean counterclockwise rotation.
    """
    x = as_points(x)
    d = x - np.asarray(f.center.x_z, dtype=float)
    rho2 = d[..., 0] ** 2 + d[..., 1] ** 2
    if np.any(rho2 == 0):
        raise DegeneratePointError("angular velocity undefined at the gyre center")
    v = f.velocity(x)
    return (d[..., 0] * v[..., 1] - d[..., 1] * v[..., 0]) / rho2


def orbital_omega(f: FlowField, r, theta) -> np.ndarray:
    """Signed angular rate of the non-dissipative field at orbit coordinates."""
    q = f.from_orbit(r, theta)
    d = q - f.orbit_origin
    rho2 = d[..., 0] ** 2 + d[..., 1] ** 2
    if np.any(rho2 == 0):
        raise DegeneratePointError("orbit point coincides with the orbit origin")
    v = f.nondissipative_velocity(q)
    return (d[..., 0] * v[..., 1] - d[..., 1] * v[..., 0]) / rho2


def rotation_sense(f: FlowField, r: float) -> int:
    w = orbital_omega(f, r, np.linspace(0, TWO_PI, 16, endpoint=False))
    if np.all(w > 0):
        return 1
    if np.all(w < 0):
        return -1
    raise OrbitError(f"angular velocity changes sign along the orbit r={r}")


def orbit_period(f: FlowField, r: float, theta_steps: int = 512) -> float:
    """Time to complete one non-dissipative orbit, ``int dtheta / Omega``.

    Composite midpoint rule in ``theta``; the rotation sense is taken from the
    field so clockwise gyres give positive periods.
    """
    if theta_steps < 1:
        raise ValueError("theta_steps must be positive")
    h = TWO_PI / theta_steps
    theta = (np.arange(theta_steps) + 0.5) * h
    w = orbital_omega(f, np.full(theta_steps, float(r)), theta)
    if not (np.all(w > 0) or np.all(w < 0)):
        raise OrbitError(f"Omega <= 0 encountered on orbit r={r}: orbit not closed")
    return float(np.sum(h / np.abs(w)))


def omega_grid(f: FlowField, radii, thetas) -> np.ndarray:
    """Rotation-sense-adjusted Omega sampled on ``len(radii) x len(thetas)``."""
    R, TH = np.meshgrid(np.asarray(radii, float), np.asarray(thetas, float), indexing="ij")
    w = orbital_omega(f, R, TH)
    sense = 1.0 if np.sum(w) >= 0 else -1.0
    return sense * w


def monotone_band(f: FlowField, theta_samples: int = 64, r_samples: int = 64,
                  r_search: tuple[float, float] = (0.1, 1.0)):
    """Largest sub-interval of ``r_search`` on which Omega strictly decreases in r.

    Omega is sampled on a regular grid; the band is monotone for every
    sampled theta. Returns ``(r_lower, r_upper)`` or ``None`` if no pair of
    neighbouring radii decreases.
    """
    lo, hi = r_search
    if not (0 < lo < hi):
        raise ValueError("r_search must be a positive increasing interval")
    if theta_samples < 8 or r_samples < 8:
        raise ValueError("need at least 8 samples in r and theta")
    radii = np.linspace(lo, hi, r_samples)
    thetas = np.linspace(0, TWO_PI, theta_samples, endpoint=False)
    w = omega_grid(f, radii, thetas)
    decreasing = np.all(np.diff(w, axis=0) < 0, axis=1)
    best, best_len, start = None, 0, None
    for i, ok in enumerate(np.append(decreasing, False)):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            if i - start > best_len:
                best, best_len = (start, i), i - start
            start = None
    if best is None:
        return None
    return float(radii[best[0]]), float(radii[best[1]])


def radius_for_period(f: FlowField, period: float, r_range: tuple[float, float],
                      theta_steps: int = 512, xtol: float = 1e-10) -> float:
    """Invert ``orbit_period`` on a monotone radius range by root bracketing."""
    from scipy.optimize import brentq

    a, b = r_range
    ga = orbit_period(f, a, theta_steps) - period
    gb = orbit_period(f, b, theta_steps) - period
    if ga * gb > 0:
        raise ValueError(f"period {period} s not attained on radii {r_range}")
    return brentq(lambda r: orbit_period(f, r, theta_steps) - period, a, b, xtol=xtol)
