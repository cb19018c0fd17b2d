"""Build fields and controllers from a config and run the studies."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gyrepatrol import control, dynamics, fitting, flow, geometry
from gyrepatrol.config import ConfigError, ControllerSpec, ExperimentConfig

log = logging.getLogger(__name__)


# ----------------------------------------------------------------------------
# builders


def build_boundary(spec) -> geometry.ImplicitBoundary:
    if spec.constraints is not None:
        on, inner = geometry.load_constraints(spec.constraints)
    else:
        on = geometry.stadium_points(spec.n_points, spec.length, spec.width)
        inner = [((x, y), v) for x, y, v in spec.interior]
    return geometry.fit_implicit_boundary(on, inner)


def build_flow(cfg: ExperimentConfig) -> flow.FlowField:
    f = cfg.flow
    if f.model == "vortex":
        prof = flow.ReciprocalProfile(f.omega_c, f.omega_r0, f.omega_power)
        return flow.VortexFlow(flow.VortexParams(prof, f.mu), f.center)
    if f.model == "rigid":
        return flow.VortexFlow(flow.VortexParams(flow.rigid_profile(f.omega_c), f.mu), f.center)
    if f.model == "zero":
        return flow.ZeroFlow(f.center)
    if f.model == "double_gyre":
        return flow.DoubleGyreFlow(flow.DoubleGyreParams(f.A, f.s, f.mu))
    b = build_boundary(f)
    R0 = f.R0 if f.R0 is not None else geometry.default_R0(f.length, f.width)
    nav = geometry.ShapeNavParams(R0)
    r_max = f.r_max if f.r_max is not None else 0.5 * f.width
    cmap = geometry.CircleMapParams(tuple(f.g), r_max, ray_length=R0)
    gains = geometry.PotentialFieldParams(f.k_r, f.k_theta)
    if f.samples is not None:
        fit = fitting.fit_gains(fitting.load_samples(f.samples, b), b, nav)
        log.info("fitted gains K_r=%.6g K_theta=%.6g (rms %.3g m/s)", fit.K_r, fit.K_theta,
                 fit.residual_rms)
        gains = fit.params
    return geometry.RacetrackFlow(b, gains, nav, cmap)


@dataclass(frozen=True)
class Bounds:
    r_lower: float
    r_upper: float
    T_lower: float
    T_upper: float


def resolve_region(cfg: ExperimentConfig, f: flow.FlowField) -> control.AnnulusRegion:
    reg = cfg.region
    if reg is None:
        raise ConfigError("experiment needs a [region]")
    if reg.r_lower is not None:
        lo, hi = reg.r_lower, reg.r_upper
    else:
        search = reg.search or _default_search(f)
        lo = flow.radius_for_period(f, reg.t_lower, search)
        hi = flow.radius_for_period(f, reg.t_upper, search)
    return control.AnnulusRegion(lo, hi, f.center, reg.epsilon)


def _default_search(f):
    if isinstance(f, geometry.RacetrackFlow):
        return (0.05 * f.cmap.r_max, 0.99 * f.cmap.r_max)
    if isinstance(f, flow.DoubleGyreFlow):
        return (0.01 * f.r_limit, 0.99 * f.r_limit)
    raise ConfigError("[region] search = lo hi is required for period targets on this flow")


def region_bounds(f: flow.FlowField, region: control.AnnulusRegion) -> Bounds:
    return Bounds(region.r_lower, region.r_upper,
                  flow.orbit_period(f, region.r_lower), flow.orbit_period(f, region.r_upper))


def radial_drift_sign(f: flow.FlowField, r: float, n: int = 32, h: float = 1e-3) -> int:
    """Sign of the mean rate of change of the orbit radius at ``r`` (+1 outward)."""
    theta = np.linspace(0, 2 * math.pi, n, endpoint=False)
    q = f.from_orbit(np.full(n, r), theta)
    v = f.velocity(q)
    r1, _ = f.to_orbit(q + h * v)
    return 1 if np.mean(r1 - r) > 0 else -1


def build_controller(spec: ControllerSpec, f: flow.FlowField, region, seed: int):
    if spec.type == "none":
        return control.NoControl()
    if spec.type in ("hysteresis", "bang_bang") and region is None:
        raise ConfigError(f"controller {spec.name!r} needs a [region]")
    if spec.type == "bang_bang":
        return control.BangBang(control.BangBangConfig(region, spec.u_max))
    if spec.type == "hysteresis":
        cfg = control.BangBangConfig(region, max(spec.u_max, spec.speed_hi), "hysteresis",
                                     (spec.speed_lo, spec.speed_hi))
        if spec.push == "auto":
            mid = 0.5 * (region.r_lower + region.r_upper)
            push = -radial_drift_sign(f, mid)
        else:
            push = -1 if spec.push == "inward" else 1
        return control.HysteresisBangBang(cfg, seed=seed, push=push)
    radius = spec.waypoint_radius
    if radius is None:
        if region is None:
            raise ConfigError(f"controller {spec.name!r}: waypoint_radius or [region] needed")
        radius = 0.5 * (region.r_lower + region.r_upper)
    ccw = spec.clockwise is not True
    if spec.clockwise is None:
        ccw = flow.rotation_sense(f, radius) > 0
    wps = control.orbit_waypoints(f, radius, spec.waypoint_spacing, ccw=ccw)
    return control.WaypointController(wps, spec.capture_radius, spec.u_max)


def start_point(cfg: ExperimentConfig, f: flow.FlowField, region) -> np.ndarray:
    if cfg.sim.x0 is not None:
        return np.asarray(cfg.sim.x0, dtype=float)
    if cfg.sim.start is not None:
        r, th = cfg.sim.start
    elif region is not None:
        r, th = 0.5 * (region.r_lower + region.r_upper), 0.0
    else:
        raise ConfigError("[simulation] start or x0 needed without a [region]")
    return f.from_orbit(np.array([r]), np.array([th]))[0]


def robot_model(cfg: ExperimentConfig) -> dynamics.RobotModel:
    return dynamics.RobotModel(cfg.sim.model, tau_m=cfg.sim.tau_m)


def workspace(cfg: ExperimentConfig, f: flow.FlowField) -> dynamics.Workspace:
    rad = cfg.sim.workspace_radius
    if rad is None:
        if isinstance(f, geometry.RacetrackFlow):
            return dynamics.Workspace((0.0, 0.0), f.nav.R_0)
        return dynamics.Workspace()
    return dynamics.Workspace(tuple(f.center.x_z), rad)


# ----------------------------------------------------------------------------
# reports


@dataclass
class RunReport:
    cycles: list[dynamics.CycleRecord]
    bounds: Bounds | None = None
    checks: dict[str, bool] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    effort_total: float = 0.0
    duration: float = 0.0
    slack: float = 0.0

    @property
    def periods(self) -> np.ndarray:
        return np.array([c.T for c in self.cycles])

    @property
    def efforts(self) -> np.ndarray:
        return np.array([c.effort_fraction for c in self.cycles])

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def aggregates(self) -> dict[str, float]:
        T, E = self.periods, self.efforts
        nan = float("nan")
        return {
            "cycles": len(T),
            "period_mean": float(T.mean()) if len(T) else nan,
            "period_std": float(T.std()) if len(T) else nan,
            "period_min": float(T.min()) if len(T) else nan,
            "period_max": float(T.max()) if len(T) else nan,
            "effort_mean": float(E.mean()) if len(E) else nan,
            "effort_std": float(E.std()) if len(E) else nan,
            "effort_total": self.effort_total,
        }

    def in_bounds(self, c: dynamics.CycleRecord) -> bool:
        if self.bounds is None:
            return True
        return self.bounds.T_lower - self.slack < c.T < self.bounds.T_upper + self.slack

    def text(self) -> str:
        agg = self.aggregates()
        lines = [f"duration            {self.duration:.2f} s",
                 f"complete cycles     {agg['cycles']}",
                 f"period              {agg['period_mean']:.4f} +- {agg['period_std']:.4f} s"
                 f" (min {agg['period_min']:.4f}, max {agg['period_max']:.4f})",
                 f"effort per cycle    {agg['effort_mean']:.4f} +- {agg['effort_std']:.4f}",
                 f"effort overall      {self.effort_total:.4f}"]
        if self.bounds is not None:
            b = self.bounds
            lines.append(f"band                r in ({b.r_lower:.6f}, {b.r_upper:.6f}) m")
            lines.append(f"period bounds       ({b.T_lower:.4f}, {b.T_upper:.4f}) s"
                         f" (slack {self.slack:g} s)")
        for note in self.notes:
            lines.append(f"note: {note}")
        for name, ok in self.checks.items():
            lines.append(f"{'PASS' if ok else 'FAIL'}  {name}")
        lines.append(f"RESULT {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"

    def write(self, out: Path, stem: str = "report") -> None:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{stem}.txt").write_text(self.text())
        with (out / f"{stem}_cycles.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cycle", "t_start", "t_end", "T", "r_min", "r_max",
                        "effort_fraction", "in_bounds"])
            for i, c in enumerate(self.cycles):
                w.writerow([i, f"{c.t_start:.6f}", f"{c.t_end:.6f}", f"{c.T:.6f}",
                            f"{c.r_min:.9f}", f"{c.r_max:.9f}", f"{c.effort_fraction:.6f}",
                            int(self.in_bounds(c))])
        with (out / f"{stem}_summary.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["metric", "value"])
            for k, v in self.aggregates().items():
                w.writerow([k, f"{v:.9g}" if isinstance(v, float) else v])
            if self.bounds is not None:
                for k in ("r_lower", "r_upper", "T_lower", "T_upper"):
                    w.writerow([k, f"{getattr(self.bounds, k):.9g}"])
            for name, ok in self.checks.items():
                w.writerow([f"check:{name}", int(ok)])


def read_cycles(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


# ----------------------------------------------------------------------------
# studies


def run_one(cfg: ExperimentConfig, f, region, spec: ControllerSpec, seed: int):
    ctrl = build_controller(spec, f, region, seed)
    x0 = start_point(cfg, f, region)
    return dynamics.integrate(f, ctrl, x0, cfg.sim.t_end, cfg.sim.dt, robot_model(cfg),
                              workspace(cfg, f))


# radial overshoot tolerated before a region exit is reported
EXIT_MARGIN = 0.01


def assess(traj: dynamics.Trajectory, bounds: Bounds | None, dt: float,
           check: bool) -> RunReport:
    cycles = dynamics.detect_cycles(traj)
    rep = RunReport(cycles, bounds, effort_total=dynamics.control_effort(traj),
                    duration=traj.duration, slack=dt)
    if bounds is not None:
        inside = ((traj.r > bounds.r_lower - EXIT_MARGIN)
                  & (traj.r < bounds.r_upper + EXIT_MARGIN))
        entered = np.nonzero(inside)[0]
        if len(entered) == 0:
            rep.notes.append("robot never entered the band")
        else:
            after = inside[entered[0]:]
            if not after.all():
                k = entered[0] + int(np.argmin(after))
                side = "outward" if traj.r[k] >= bounds.r_upper else "inward"
                rep.notes.append(f"region exit ({side}) at t={traj.t[k]:.2f} s, "
                                 f"r={traj.r[k]:.4f} m")
        if check:
            rep.checks["every complete cycle period within bounds"] = bool(
                len(cycles) > 0 and all(rep.in_bounds(c) for c in cycles))
    return rep


def check_monotone(f, region, samples: int = 64) -> tuple[float, float] | None:
    band = flow.monotone_band(f, samples, samples, (region.r_lower, region.r_upper))
    full = band is not None and math.isclose(band[0], region.r_lower) and math.isclose(
        band[1], region.r_upper)
    return band if full else None


def verify_theorem(cfg: ExperimentConfig, jobs: int = 1):
    """Seeded runs of the first controller; every cycle must respect the bounds."""
    f = build_flow(cfg)
    region = resolve_region(cfg, f)
    if check_monotone(f, region) is None:
        raise ConfigError(
            f"band ({region.r_lower:g}, {region.r_upper:g}) m contains radii where the "
            "angular velocity is not strictly decreasing")
    bounds = region_bounds(f, region)
    seeds = [cfg.seed + i for i in range(cfg.seeds)]
    spec = cfg.controller
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as ex:
            trajs = list(ex.map(_run_seed, [(cfg, spec, s) for s in seeds]))
    else:
        trajs = [run_one(cfg, f, region, spec, s) for s in seeds]
    reports = [assess(t, bounds, cfg.sim.dt, True) for t in trajs]
    return bounds, seeds, reports


def _run_seed(args):
    cfg, spec, seed = args
    f = build_flow(cfg)
    return run_one(cfg, f, resolve_region(cfg, f), spec, seed)


def compare(cfg: ExperimentConfig):
    f = build_flow(cfg)
    region = resolve_region(cfg, f) if cfg.region is not None else None
    bounds = region_bounds(f, region) if region is not None else None
    rows = []
    for spec in cfg.controllers:
        traj = run_one(cfg, f, region, spec, cfg.seed)
        rep = assess(traj, bounds, cfg.sim.dt, False)
        agg = rep.aggregates()
        per_cycle_active = [dynamics.active_time(traj, c) for c in rep.cycles]
        rows.append({
            "controller": spec.name,
            "type": spec.type,
            "cycles": agg["cycles"],
            "period_mean": agg["period_mean"],
            "period_std": agg["period_std"],
            "effort_mean": agg["effort_mean"],
            "effort_std": agg["effort_std"],
            "effort_total": agg["effort_total"],
            "active_per_cycle_mean": float(np.mean(per_cycle_active)) if per_cycle_active
            else float("nan"),
        })
    return rows
