"""Compiled scalar kernels and the fixed-step RK4 loop.

Mirrors the numpy implementations in ``flow``, ``geometry`` and ``control``
for the built-in field and controller families; ``dynamics.integrate``
falls back to pure Python for anything else. Tests check the two paths agree.
"""
import math

import numpy as np
from numba import njit

FLOW_VORTEX = 0
FLOW_DOUBLE_GYRE = 1
FLOW_POTENTIAL = 2

MAP_POLAR = 0
MAP_STREAM = 1
MAP_CIRCLE = 2

CTRL_NONE = 0
CTRL_BANG_BANG = 1
CTRL_HYSTERESIS = 2
CTRL_WAYPOINT = 3
CTRL_CONSTANT = 4

OK = 0
EXIT_WORKSPACE = 1
FLOW_DOMAIN = 2
MAP_DOMAIN = 3

NO_CENTERS = np.zeros((0, 2))
NO_WEIGHTS = np.zeros(0)

TWO_PI = 2.0 * math.pi


@njit(cache=True)
def tps_eval(centers, weights, a0, a1, a2, x, y):
    val = a0 + a1 * x + a2 * y
    gx = a1
    gy = a2
    for i in range(centers.shape[0]):
        dx = x - centers[i, 0]
        dy = y - centers[i, 1]
        d2 = dx * dx + dy * dy
        if d2 > 0.0:
            ld = 0.5 * math.log(d2)
            w = weights[i]
            val += w * d2 * ld
            c = w * (2.0 * ld + 1.0)
            gx += c * dx
            gy += c * dy
    return val, gx, gy


@njit(cache=True)
def flow_velocity(kind, fp, centers, weights, x, y):
    """Returns (vx, vy, ok)."""
    if kind == FLOW_VORTEX:
        c, r0, power, mu, ox, oy = fp[0], fp[1], fp[2], fp[3], fp[4], fp[5]
        dx = x - ox
        dy = y - oy
        r = math.sqrt(dx * dx + dy * dy)
        om = 0.0
        if r > 0.0:
            if power == 0.0:
                om = c
            else:
                if r + r0 <= 0.0:
                    return 0.0, 0.0, False
                om = c / (r + r0) ** power
        return -om * dy - mu * dx, om * dx - mu * dy, True
    elif kind == FLOW_DOUBLE_GYRE:
        A, s, mu = fp[0], fp[1], fp[2]
        k = math.pi / s
        vx = -math.pi * A * math.sin(k * x) * math.cos(k * y) - mu * x
        vy = math.pi * A * math.cos(k * x) * math.sin(k * y) - mu * y
        return vx, vy, True
    else:
        K_r, K_th, R0 = fp[0], fp[1], fp[2]
        g, gx, gy = tps_eval(centers, weights, fp[3], fp[4], fp[5], x, y)
        nq = math.sqrt(x * x + y * y)
        D = R0 - nq
        S = g * g + D
        if S <= 0.0:
            return 0.0, 0.0, False
        dDx = 0.0
        dDy = 0.0
        if nq > 0.0:
            dDx = -x / nq
            dDy = -y / nq
        S2 = S * S
        px = (2.0 * g * gx * D - g * g * dDx) / S2
        py = (2.0 * g * gy * D - g * g * dDy) / S2
        return -K_r * px - K_th * gy, -K_r * py + K_th * gx, True


@njit(cache=True)
def orbit_coords(kind, mp, centers, weights, x, y):
    """Returns (r, theta, ok) with theta in [0, 2 pi)."""
    gx, gy = mp[0], mp[1]
    dx = x - gx
    dy = y - gy
    if dx == 0.0 and dy == 0.0 and kind == MAP_CIRCLE:
        return 0.0, 0.0, False
    th = math.atan2(dy, dx)
    if th < 0.0:
        th += TWO_PI
    if th >= TWO_PI:
        th -= TWO_PI
    if kind == MAP_POLAR:
        return math.sqrt(dx * dx + dy * dy), th, True
    elif kind == MAP_STREAM:
        s = mp[2]
        k = math.pi / s
        psi = math.sin(k * x) * math.sin(k * y)
        psi = min(1.0, max(-1.0, psi))
        return s / math.pi * math.acos(psi), th, True
    else:
        g, _, _ = tps_eval(centers, weights, mp[3], mp[4], mp[5], x, y)
        if 1.0 + g < 0.0:
            return 0.0, th, False
        return mp[2] * math.sqrt(1.0 + g), th, True


@njit(cache=True)
def _deriv(fk, fp, fc, fw, x, y, vx_r, vy_r, thrust_x, thrust_y, inertial, tau_m):
    vx, vy, ok = flow_velocity(fk, fp, fc, fw, x, y)
    if inertial:
        return vx_r, vy_r, (vx + thrust_x - vx_r) / tau_m, (vy + thrust_y - vy_r) / tau_m, ok
    return vx + thrust_x, vy + thrust_y, 0.0, 0.0, ok


@njit(cache=True)
def simulate(fk, fp, fc, fw, mk, mp, ck, cp, waypoints, draws, latch0, wp0,
             x0, n_steps, dt, inertial, tau_m, thrust_speed, ws,
             t_out, x_out, v_out, r_out, th_out, u_out, thr_out, act_out):
    """Run ``n_steps`` RK4 steps, filling the output arrays (length n_steps + 1).

    Returns (status, last_index, latch, waypoint_index).
    """
    state = np.empty(4)
    state[0] = x0[0]
    state[1] = x0[1]
    state[2] = x0[2]
    state[3] = x0[3]
    latch = latch0
    wp = wp0
    nwp = waypoints.shape[0]
    for k in range(n_steps + 1):
        t = k * dt
        x = state[0]
        y = state[1]
        if ws[2] > 0.0:
            ex = x - ws[0]
            ey = y - ws[1]
            if ex * ex + ey * ey > ws[2] * ws[2]:
                return EXIT_WORKSPACE, k, latch, wp
        r, th, ok = orbit_coords(mk, mp, fc, fw, x, y)
        if not ok:
            return MAP_DOMAIN, k, latch, wp
        # controller
        u = 0.0
        heading = th
        if ck == CTRL_BANG_BANG:
            if r <= cp[0]:
                u = cp[2]
            elif r >= cp[1]:
                u = cp[2]
                heading = th + math.pi
        elif ck == CTRL_HYSTERESIS:
            if cp[2] < 0.0:
                if (not latch) and r >= cp[1]:
                    latch = True
                elif latch and r <= cp[0]:
                    latch = False
                if latch:
                    heading = th + math.pi
            else:
                if (not latch) and r <= cp[0]:
                    latch = True
                elif latch and r >= cp[1]:
                    latch = False
            if latch:
                u = draws[k]
        elif ck == CTRL_WAYPOINT:
            wx = waypoints[wp, 0] - x
            wy = waypoints[wp, 1] - y
            if wx * wx + wy * wy <= cp[0] * cp[0]:
                wp = (wp + 1) % nwp
                wx = waypoints[wp, 0] - x
                wy = waypoints[wp, 1] - y
            u = cp[1]
            heading = math.atan2(wy, wx)
        elif ck == CTRL_CONSTANT:
            u = cp[0]
            heading = cp[1]
        heading = heading % TWO_PI
        if heading >= TWO_PI:
            heading = 0.0
        t_out[k] = t
        x_out[k, 0] = x
        x_out[k, 1] = y
        v_out[k, 0] = state[2]
        v_out[k, 1] = state[3]
        r_out[k] = r
        th_out[k] = th
        u_out[k] = u
        thr_out[k] = heading
        act_out[k] = u > 0.0
        if k == n_steps:
            break
        mag = u
        if inertial:
            mag = thrust_speed if u > 0.0 else 0.0
        tx = mag * math.cos(heading)
        ty = mag * math.sin(heading)
        x, y, a, b = state[0], state[1], state[2], state[3]
        h = 0.5 * dt
        a1, b1, c1, d1, ok1 = _deriv(fk, fp, fc, fw, x, y, a, b, tx, ty, inertial, tau_m)
        a2, b2, c2, d2, ok2 = _deriv(fk, fp, fc, fw, x + h * a1, y + h * b1, a + h * c1,
                                     b + h * d1, tx, ty, inertial, tau_m)
        a3, b3, c3, d3, ok3 = _deriv(fk, fp, fc, fw, x + h * a2, y + h * b2, a + h * c2,
                                     b + h * d2, tx, ty, inertial, tau_m)
        a4, b4, c4, d4, ok4 = _deriv(fk, fp, fc, fw, x + dt * a3, y + dt * b3, a + dt * c3,
                                     b + dt * d3, tx, ty, inertial, tau_m)
        if not (ok1 and ok2 and ok3 and ok4):
            return FLOW_DOMAIN, k, latch, wp
        s6 = dt / 6.0
        state[0] = x + s6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        state[1] = y + s6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        state[2] = a + s6 * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
        state[3] = b + s6 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
    return OK, n_steps, latch, wp


@njit(cache=True)
def inverse_circle_map(centers, weights, affine, gx, gy, r_max, ray_length, r, theta,
                       scan, tol, out):
    """Per-ray scan for the first bracket, then bisection. Returns False if a ray misses."""
    a0, a1, a2 = affine[0], affine[1], affine[2]
    step = ray_length / (scan - 1)
    for i in range(r.shape[0]):
        ex = math.cos(theta[i])
        ey = math.sin(theta[i])
        target = r[i]
        lo = 0.0
        hi = -1.0
        for j in range(scan):
            rho = j * step
            g, _, _ = tps_eval(centers, weights, a0, a1, a2, gx + rho * ex, gy + rho * ey)
            if r_max * math.sqrt(max(1.0 + g, 0.0)) - target >= 0.0:
                hi = rho
                break
            lo = rho
        if hi < 0.0:
            return False
        if hi == 0.0:
            out[i, 0] = gx
            out[i, 1] = gy
            continue
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            g, _, _ = tps_eval(centers, weights, a0, a1, a2, gx + mid * ex, gy + mid * ey)
            if r_max * math.sqrt(max(1.0 + g, 0.0)) - target < 0.0:
                lo = mid
            else:
                hi = mid
        rho = 0.5 * (lo + hi)
        out[i, 0] = gx + rho * ex
        out[i, 1] = gy + rho * ey
    return True
