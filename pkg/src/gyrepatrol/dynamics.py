"""Robot-in-flow integration, cycle detection and control-effort statistics."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gyrepatrol import _fast
from gyrepatrol.control import Controller, MEAN_THRUST, TOP_SPEED
from gyrepatrol.flow import FlowDomainError, FlowField, GyreCenter, TWO_PI

CSV_HEADER = ["t", "x1", "x2", "r", "theta", "u", "theta_r", "active"]


class SimulationAborted(RuntimeError):
    """Integration stopped early; ``trajectory`` holds the states up to the failure."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class RobotModel:
    """``kinematic``: robot velocity = flow + commanded velocity.

    ``inertial``: velocity relaxes toward flow + thrust/drag with time
    constant ``tau_m``; thrust is the cycle-averaged swimmer force whenever
    the command is active.
    """

    mode: str = "kinematic"
    tau_m: float = 5.0
    thrust: float = MEAN_THRUST
    drag: float = MEAN_THRUST / TOP_SPEED

    def __post_init__(self):
        if self.mode not in ("kinematic", "inertial"):
            raise ValueError(f"unknown robot model {self.mode!r}")
        if self.tau_m <= 0 or self.drag <= 0:
            raise ValueError("tau_m and drag must be positive")

    @property
    def inertial(self) -> bool:
        return self.mode == "inertial"

    @property
    def terminal_speed(self) -> float:
        return self.thrust / self.drag


@dataclass(frozen=True)
class Workspace:
    """Disk the robot must stay inside; ``radius=0`` disables the check."""

    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0


@dataclass
class Trajectory:
    t: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    u: np.ndarray
    theta_r: np.ndarray
    active: np.ndarray
    center: GyreCenter
    dt: float
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0]) if len(self.t) else 0.0

    def truncated(self, n: int) -> "Trajectory":
        return Trajectory(self.t[:n], self.pos[:n], self.vel[:n], self.r[:n], self.theta[:n],
                          self.u[:n], self.theta_r[:n], self.active[:n], self.center,
                          self.dt, dict(self.meta))


@dataclass(frozen=True)
class CycleRecord:
    T: float
    r_min: float
    r_max: float
    effort_fraction: float
    start_index: int
    end_index: int
    t_start: float
    t_end: float


def _alloc(n: int):
    return (np.empty(n), np.empty((n, 2)), np.zeros((n, 2)), np.empty(n), np.empty(n),
            np.empty(n), np.empty(n), np.zeros(n, dtype=np.bool_))


def _rk4(deriv, y, dt):
    k1 = deriv(y)
    k2 = deriv(y + 0.5 * dt * k1)
    k3 = deriv(y + 0.5 * dt * k2)
    k4 = deriv(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(f: FlowField, c: Controller, x0, t_end: float, dt: float = 0.01,
              model: RobotModel = RobotModel(), workspace: Workspace = Workspace(),
              v0=None, compiled: bool | None = None) -> Trajectory:
    """Fixed-step RK4 of the robot position under flow plus control.

    The controller is queried once per step from the robot's orbit
    coordinates and its command is held over the step. ``compiled=None`` uses
    the compiled loop whenever both the field and the controller support it.
    Raises :class:`SimulationAborted` when the robot leaves the workspace or
    a field is evaluated outside its domain.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end <= dt:
        raise ValueError("t_end must exceed dt")
    n_steps = int(math.ceil(t_end / dt - 1e-9))
    x0 = np.asarray(x0, dtype=float)
    v0 = np.zeros(2) if v0 is None else np.asarray(v0, dtype=float)
    fspec = f.kernel_spec()
    cspec = c.kernel_spec(n_steps + 1) if (compiled is not False and fspec is not None) else None
    if compiled and (fspec is None or cspec is None):
        raise ValueError("field or controller has no compiled kernel")
    out = _alloc(n_steps + 1)
    meta = {"dt": dt, "t_end": t_end, "model": model.mode, "compiled": cspec is not None}
    if cspec is not None:
        fk, fp, fc, fw, mk, mp = fspec
        ck, cp, wps, draws, latch0, idx0 = cspec
        ws = np.array([*workspace.center, workspace.radius], dtype=float)
        state0 = np.array([x0[0], x0[1], v0[0], v0[1]])
        status, last, latch, idx = _fast.simulate(
            fk, fp, fc, fw, mk, mp, ck, cp, wps, draws, latch0, idx0, state0, n_steps,
            float(dt), model.inertial, float(model.tau_m), float(model.terminal_speed), ws, *out)
        c.kernel_sync(latch, idx)
        reason = {_fast.EXIT_WORKSPACE: "left the workspace",
                  _fast.FLOW_DOMAIN: "flow evaluated outside its domain",
                  _fast.MAP_DOMAIN: "orbit coordinates undefined"}.get(status)
    else:
        last, reason = _python_loop(f, c, x0, v0, n_steps, dt, model, workspace, out)
    traj = Trajectory(*out, center=f.center, dt=dt, meta=meta)
    if reason is not None:
        partial = traj.truncated(last + (0 if reason in ("left the workspace",
                                                         "orbit coordinates undefined") else 1))
        where = traj.pos[min(last, len(traj) - 1)]
        raise SimulationAborted(
            f"simulation aborted at step {last} (t={last * dt:.3f} s, x=({where[0]:.4f}, "
            f"{where[1]:.4f})): robot {reason}", partial)
    return traj


def _python_loop(f, c, x0, v0, n_steps, dt, model, workspace, out):
    t_o, x_o, v_o, r_o, th_o, u_o, thr_o, a_o = out
    y = np.array([x0[0], x0[1], v0[0], v0[1]])
    ws_c = np.asarray(workspace.center, dtype=float)
    for k in range(n_steps + 1):
        q = y[:2]
        if workspace.radius > 0 and np.sum((q - ws_c) ** 2) > workspace.radius ** 2:
            return k, "left the workspace"
        try:
            r, th = f.to_orbit(q)
        except FlowDomainError:
            return k, "orbit coordinates undefined"
        cmd = c.command(k * dt, q.copy(), float(r), float(th))
        t_o[k] = k * dt
        x_o[k] = q
        v_o[k] = y[2:]
        r_o[k], th_o[k] = r, th
        u_o[k], thr_o[k], a_o[k] = cmd.u, cmd.theta_r, cmd.active
        if k == n_steps:
            break
        mag = cmd.u
        if model.inertial:
            mag = model.terminal_speed if cmd.active else 0.0
        push = mag * np.array([math.cos(cmd.theta_r), math.sin(cmd.theta_r)])

        def deriv(s):
            v = f.velocity(s[:2])
            if model.inertial:
                return np.concatenate([s[2:], (v + push - s[2:]) / model.tau_m])
            return np.concatenate([v + push, np.zeros(2)])

        try:
            y = _rk4(deriv, y, dt)
        except FlowDomainError:
            return k, "flow evaluated outside its domain"
    return n_steps, None


# ----------------------------------------------------------------------------
# cycles and effort


def unwrap_progress(theta: np.ndarray) -> np.ndarray:
    """Accumulated rotation since the first sample, positive in the net sense."""
    u = np.unwrap(np.asarray(theta, dtype=float))
    prog = u - u[0]
    if len(prog) and prog[-1] < 0:
        prog = -prog
    return prog


def detect_cycles(traj: Trajectory) -> list[CycleRecord]:
    """One record per full 2 pi of accumulated rotation about the center.

    Crossing times are linearly interpolated between samples; the final
    partial cycle is dropped.
    """
    if len(traj) < 2:
        return []
    prog = unwrap_progress(traj.theta)
    reach = np.maximum.accumulate(prog)
    n_cycles = int(reach[-1] // TWO_PI)
    if n_cycles == 0:
        return []
    levels = TWO_PI * np.arange(1, n_cycles + 1)
    # first sample at or beyond each level; never index 0 since prog[0] = 0
    idx = np.searchsorted(reach, levels, side="left")
    t = traj.t
    p0, p1 = prog[idx - 1], prog[idx]
    frac = np.where(p1 != p0, (levels - p0) / np.where(p1 != p0, p1 - p0, 1.0), 1.0)
    frac = np.clip(frac, 0.0, 1.0)
    t_cross = t[idx - 1] + frac * (t[idx] - t[idx - 1])
    records = []
    k_prev, t_prev = 0, float(t[0])
    for j, tc in zip(idx.tolist(), t_cross.tolist()):
        seg = slice(k_prev, j + 1)
        records.append(CycleRecord(
            T=tc - t_prev,
            r_min=float(np.min(traj.r[seg])),
            r_max=float(np.max(traj.r[seg])),
            effort_fraction=_effort(traj.active, k_prev, j),
            start_index=k_prev,
            end_index=j,
            t_start=t_prev,
            t_end=tc,
        ))
        k_prev, t_prev = j, tc
    return records


def _effort(active, start, end):
    if end <= start:
        raise ValueError("zero-duration window")
    return float(np.count_nonzero(active[start:end])) / (end - start)


def control_effort(traj: Trajectory, window: CycleRecord | None = None) -> float:
    """Fraction of steps in the window with nonzero thrust."""
    if window is None:
        return _effort(traj.active, 0, len(traj) - 1)
    return _effort(traj.active, window.start_index, window.end_index)


def active_time(traj: Trajectory, window: CycleRecord | None = None) -> float:
    lo, hi = (0, len(traj) - 1) if window is None else (window.start_index, window.end_index)
    return float(np.count_nonzero(traj.active[lo:hi])) * traj.dt


# ----------------------------------------------------------------------------
# persistence


def write_csv(traj: Trajectory, path, decimate: int = 1) -> None:
    if decimate < 1:
        raise ValueError("decimate must be >= 1")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for k in range(0, len(traj), decimate):
            w.writerow([
                f"{traj.t[k]:.6f}", f"{traj.pos[k, 0]:.12g}", f"{traj.pos[k, 1]:.12g}",
                f"{traj.r[k]:.12g}", f"{traj.theta[k]:.12g}", f"{traj.u[k]:.12g}",
                f"{traj.theta_r[k]:.12g}", int(traj.active[k]),
            ])


def read_csv(path, center: GyreCenter | None = None) -> Trajectory:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
    data = np.array([[float(v) for v in row] for row in rows[1:]]).reshape(-1, 8)
    dt = float(data[1, 0] - data[0, 0]) if len(data) > 1 else 0.0
    return Trajectory(data[:, 0], data[:, 1:3].copy(), np.zeros((len(data), 2)), data[:, 3],
                      data[:, 4], data[:, 5], data[:, 6], data[:, 7] > 0,
                      center or GyreCenter.single((0.0, 0.0)), dt)
