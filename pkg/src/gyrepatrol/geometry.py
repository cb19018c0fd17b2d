"""Implicit tank boundary, shape navigation function and the racetrack flow.

The boundary ``gamma`` is a thin-plate-spline interpolant with an affine
tail, negative inside the tank and zero on it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gyrepatrol.flow import (
    DegeneratePointError,
    FlowDomainError,
    FlowField,
    GyreCenter,
    TWO_PI,
    as_points,
    ray_bisect,
    wrap_angle,
)

log = logging.getLogger(__name__)


class SingularSystemError(ValueError):
    pass


class NoRootError(ValueError):
    pass


def _tps(d):
    out = np.zeros_like(d)
    nz = d > 0
    out[nz] = d[nz] ** 2 * np.log(d[nz])
    return out


@dataclass(frozen=True)
class ImplicitBoundary:
    centers: np.ndarray
    weights: np.ndarray
    affine: np.ndarray  # (a0, a1, a2): a0 + a1 x1 + a2 x2
    on_points: np.ndarray = field(repr=False)
    interior: np.ndarray = field(repr=False)  # rows (x1, x2, gamma)

    def gamma(self, q) -> np.ndarray:
        q = as_points(q)
        d = np.linalg.norm(q[..., None, :] - self.centers, axis=-1)
        return _tps(d) @ self.weights + self.affine[0] + q @ self.affine[1:]

    def grad(self, q) -> np.ndarray:
        return self.gamma_and_grad(q)[1]

    def gamma_and_grad(self, q):
        q = as_points(q)
        diff = q[..., None, :] - self.centers
        d = np.linalg.norm(diff, axis=-1)
        nz = d > 0
        logd = np.log(np.where(nz, d, 1.0))
        val = np.where(nz, d * d * logd, 0.0) @ self.weights + self.affine[0] + q @ self.affine[1:]
        # d/dq [d^2 log d] = (2 log d + 1) (q - c), zero at the center
        coef = np.where(nz, 2.0 * logd + 1.0, 0.0) * self.weights
        g = np.einsum("...m,...mk->...k", coef, diff) + self.affine[1:]
        return val, g

    def kernel_arrays(self):
        return (np.ascontiguousarray(self.centers, dtype=float),
                np.ascontiguousarray(self.weights, dtype=float),
                np.asarray(self.affine, dtype=float))


def fit_implicit_boundary(on_points, interior_points) -> ImplicitBoundary:
    """Fit ``gamma`` through ``gamma(on_points) = 0`` and the interior constraints.

    ``interior_points`` is a sequence of ``((x1, x2), value)`` with negative
    values.
    """
    on = np.asarray(on_points, dtype=float).reshape(-1, 2)
    if len(on) < 3:
        raise ValueError("need at least 3 on-boundary points")
    inner = [(np.asarray(p, float), float(v)) for p, v in interior_points]
    if not inner:
        raise ValueError("need at least one interior constraint")
    if any(v >= 0 for _, v in inner):
        raise ValueError("interior constraint values must be negative")
    centers = np.vstack([on] + [p.reshape(1, 2) for p, _ in inner])
    values = np.concatenate([np.zeros(len(on)), [v for _, v in inner]])
    n = len(centers)
    if len(np.unique(np.round(centers, 12), axis=0)) < n:
        raise SingularSystemError("duplicate constraint points")
    d = np.linalg.norm(centers[:, None] - centers[None], axis=-1)
    P = np.c_[np.ones(n), centers]
    M = np.block([[_tps(d), P], [P.T, np.zeros((3, 3))]])
    rhs = np.concatenate([values, np.zeros(3)])
    if np.linalg.cond(M) > 1e14:
        raise SingularSystemError("degenerate constraint set (e.g. collinear points)")
    sol = np.linalg.solve(M, rhs)
    return ImplicitBoundary(centers, sol[:n], sol[n:], on,
                            np.array([[*p, v] for p, v in inner]))


def stadium_points(n: int = 64, length: float = 4.5, width: float = 3.0,
                   center=(0.0, 0.0)) -> np.ndarray:
    """``n`` points evenly spaced by arc length on a stadium (racetrack) curve."""
    R = 0.5 * width
    a = 0.5 * (length - width)
    if a < 0:
        raise ValueError("length must be at least width")
    perimeter = TWO_PI * R + 4 * a
    pts = []
    for s in np.arange(n) * perimeter / n:
        if s < 2 * a:
            pts.append((-a + s, -R))
        elif s < 2 * a + math.pi * R:
            t = -0.5 * math.pi + (s - 2 * a) / R
            pts.append((a + R * math.cos(t), R * math.sin(t)))
        elif s < 4 * a + math.pi * R:
            pts.append((a - (s - 2 * a - math.pi * R), R))
        else:
            t = 0.5 * math.pi + (s - 4 * a - math.pi * R) / R
            pts.append((-a + R * math.cos(t), R * math.sin(t)))
    return np.asarray(pts) + np.asarray(center, dtype=float)


def load_constraints(path):
    """Read ``x y gamma_value`` lines; ``gamma_value`` 0 marks boundary points."""
    on, inner = [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'x y gamma_value'")
        try:
            x, y, v = map(float, parts)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric field") from None
        if v == 0:
            on.append((x, y))
        else:
            inner.append(((x, y), v))
    return on, inner


def save_constraints(path, on_points, interior_points):
    lines = [f"{x:.17g} {y:.17g} 0" for x, y in np.asarray(on_points, float)]
    lines += [f"{p[0]:.17g} {p[1]:.17g} {v:.17g}" for p, v in interior_points]
    Path(path).write_text("\n".join(lines) + "\n")


# ----------------------------------------------------------------------------
# shape navigation function and potential field


@dataclass(frozen=True)
class ShapeNavParams:
    R_0: float

    def __post_init__(self):
        if self.R_0 <= 0:
            raise ValueError("R_0 must be positive")


@dataclass(frozen=True)
class PotentialFieldParams:
    K_r: float
    K_theta: float

    def __post_init__(self):
        if self.K_theta == 0:
            raise ValueError("K_theta must be nonzero")


def _nav_parts(b: ImplicitBoundary, p: ShapeNavParams, q):
    q = as_points(q)
    g, dg = b.gamma_and_grad(q)
    norm = np.hypot(q[..., 0], q[..., 1])
    D = p.R_0 - norm
    S = g * g + D
    if np.any(S <= 0):
        raise FlowDomainError("shape navigation denominator is not positive")
    return q, g, dg, norm, D, S


def shape_navigation(b: ImplicitBoundary, p: ShapeNavParams, q) -> np.ndarray:
    """``phi = gamma^2 / (gamma^2 + (R_0 - |q|))``, zero on the boundary."""
    _, g, _, _, _, S = _nav_parts(b, p, q)
    return g * g / S


def shape_navigation_grad(b: ImplicitBoundary, p: ShapeNavParams, q) -> np.ndarray:
    q, g, dg, norm, D, S = _nav_parts(b, p, q)
    # grad |q| is taken as 0 at the origin
    safe = np.where(norm > 0, norm, 1.0)[..., None]
    dD = np.where(norm[..., None] > 0, -q / safe, 0.0)
    return (2.0 * g[..., None] * dg * D[..., None] - (g * g)[..., None] * dD) / (S * S)[..., None]


def curl_term(b: ImplicitBoundary, q) -> np.ndarray:
    """Planar reduction of ``curl (0, 0, gamma)``: ``(dgamma/dx2, -dgamma/dx1)``."""
    dg = b.grad(q)
    return np.stack([dg[..., 1], -dg[..., 0]], axis=-1)


def potential_field_velocity(b: ImplicitBoundary, p: PotentialFieldParams,
                             nav: ShapeNavParams, q) -> np.ndarray:
    return -p.K_r * shape_navigation_grad(b, nav, q) - p.K_theta * curl_term(b, q)


# ----------------------------------------------------------------------------
# circle map


@dataclass(frozen=True)
class CircleMapParams:
    g: tuple[float, float] = (0.0, 0.0)
    r_max: float = 1.5
    ray_length: float = 10.0

    def __post_init__(self):
        if self.r_max <= 0:
            raise ValueError("r_max must be positive")


def circle_map(p: CircleMapParams, b: ImplicitBoundary, q):
    """Map tank coordinates to circular ``(r, theta)`` about the gyre center."""
    q = as_points(q)
    d = q - np.asarray(p.g, dtype=float)
    if np.any((d[..., 0] == 0) & (d[..., 1] == 0)):
        raise DegeneratePointError("circle map undefined at the gyre center")
    one_plus = 1.0 + b.gamma(q)
    if np.any(one_plus < 0):
        raise FlowDomainError("1 + gamma < 0: point below the mapped origin level")
    return p.r_max * np.sqrt(one_plus), wrap_angle(np.arctan2(d[..., 1], d[..., 0]))


def circle_map_point(p: CircleMapParams, b: ImplicitBoundary, q) -> np.ndarray:
    r, theta = circle_map(p, b, q)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


def inverse_circle_map(p: CircleMapParams, b: ImplicitBoundary, r, theta,
                       scan: int = 400, tol: float = 1e-10) -> np.ndarray:
    """First point along the ray from ``g`` at angle ``theta`` that maps to ``r``.

    The ray is scanned on ``scan`` evenly spaced points for the first sign
    change, then the bracket is bisected to ``tol`` metres.
    """
    from gyrepatrol import _fast

    r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
    if np.any(r < 0) or np.any(r > p.r_max):
        raise FlowDomainError("r outside [0, r_max]")
    c, w, a = b.kernel_arrays()
    out = np.empty((r.size, 2))
    ok = _fast.inverse_circle_map(c, w, a, float(p.g[0]), float(p.g[1]), float(p.r_max),
                                  float(p.ray_length), np.ascontiguousarray(r.reshape(-1)),
                                  np.ascontiguousarray(theta.reshape(-1)), scan, tol, out)
    if not ok:
        raise NoRootError(f"level set not reached within ray length {p.ray_length} m")
    return out.reshape(r.shape + (2,))


def ray_monotonicity_violations(p: CircleMapParams, b: ImplicitBoundary,
                                n_rays: int = 64, samples: int = 200):
    """Angles of rays along which the mapped radius decreases before the boundary."""
    g = np.asarray(p.g, dtype=float)
    bad = []
    for th in np.linspace(0, TWO_PI, n_rays, endpoint=False):
        e = np.array([math.cos(th), math.sin(th)])
        rho = np.linspace(0, p.ray_length, samples)
        gam = b.gamma(g + rho[:, None] * e)
        inside = gam <= 0
        stop = np.argmin(inside) if not inside.all() else samples
        rr = np.sqrt(np.maximum(1 + gam[:stop], 0))
        if np.any(np.diff(rr) < -1e-12):
            bad.append(float(th))
    if bad:
        log.warning("circle map not monotone along %d of %d rays", len(bad), n_rays)
    return bad


# ----------------------------------------------------------------------------


def default_R0(length: float = 4.5, width: float = 3.0) -> float:
    return 2.0 * math.hypot(length, width)


class RacetrackFlow(FlowField):
    """Potential-field model of the tank flow, with circle-map orbit coordinates."""

    def __init__(self, boundary: ImplicitBoundary, gains: PotentialFieldParams,
                 nav: ShapeNavParams, cmap: CircleMapParams):
        self.boundary = boundary
        self.gains = gains
        self.nav = nav
        self.cmap = cmap
        self.center = GyreCenter.single(cmap.g)

    def with_gains(self, gains: PotentialFieldParams) -> "RacetrackFlow":
        return RacetrackFlow(self.boundary, gains, self.nav, self.cmap)

    def velocity(self, x):
        return potential_field_velocity(self.boundary, self.gains, self.nav, x)

    def nondissipative_velocity(self, x):
        return -self.gains.K_theta * curl_term(self.boundary, x)

    def to_orbit(self, x):
        return circle_map(self.cmap, self.boundary, x)

    def from_orbit(self, r, theta):
        return inverse_circle_map(self.cmap, self.boundary, r, theta)

    def kernel_spec(self):
        from gyrepatrol import _fast

        c, w, a = self.boundary.kernel_arrays()
        fp = np.array([self.gains.K_r, self.gains.K_theta, self.nav.R_0, *a])
        mp = np.array([*self.cmap.g, self.cmap.r_max, *a])
        return _fast.FLOW_POTENTIAL, fp, c, w, _fast.MAP_CIRCLE, mp


def racetrack_flow(K_r: float, K_theta: float, length: float = 4.5, width: float = 3.0,
                   n_points: int = 64, interior=None, R_0: float | None = None,
                   r_max: float | None = None, g=(0.0, 0.0)) -> RacetrackFlow:
    """Convenience constructor: stadium boundary with ``gamma(g) = -1``."""
    on = stadium_points(n_points, length, width)
    interior = interior if interior is not None else [(g, -1.0)]
    b = fit_implicit_boundary(on, interior)
    R_0 = R_0 if R_0 is not None else default_R0(length, width)
    r_max = r_max if r_max is not None else 0.5 * width
    return RacetrackFlow(b, PotentialFieldParams(K_r, K_theta), ShapeNavParams(R_0),
                         CircleMapParams(tuple(g), r_max, ray_length=R_0))
