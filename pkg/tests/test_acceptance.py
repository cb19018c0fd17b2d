"""Acceptance criteria. Each test prints one ``PASS``/``FAIL`` line.

Run with ``pytest tests/test_acceptance.py -v``.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from gyrepatrol import dynamics, experiment, fitting, flow, geometry
from gyrepatrol.config import load_config, parse_config
from gyrepatrol.control import NoControl
from gyrepatrol.flow import (
    DoubleGyreFlow,
    DoubleGyreParams,
    ReciprocalProfile,
    VortexFlow,
    VortexParams,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n} {'PASS' if ok else 'FAIL'}: {detail}")
    return emit


@pytest.fixture(scope="module")
def stadium():
    return geometry.racetrack_flow(0.05, 0.19)


def test_criterion_1_period_bounds_in_vortex(report, tmp_path):
    cfg = load_config(CONFIGS / "vortex_theorem.ini")
    cfg.out = tmp_path
    assert (cfg.flow.mu, cfg.region.r_lower, cfg.region.r_upper, cfg.seeds) == (0.02, 1.0, 2.0, 20)
    assert cfg.sim.t_end == 5000 and cfg.sim.dt == 0.01
    t0 = time.perf_counter()
    bounds, seeds, reports = experiment.verify_theorem(cfg)
    elapsed = time.perf_counter() - t0
    periods = np.concatenate([r.periods for r in reports])
    lo, hi = bounds.T_lower - cfg.sim.dt, bounds.T_upper + cfg.sim.dt
    inside = (periods > lo) & (periods < hi)
    ok = (math.isclose(bounds.T_lower, 2 * math.pi, rel_tol=1e-12)
          and math.isclose(bounds.T_upper, 4 * math.pi, rel_tol=1e-12)
          and len(seeds) == 20 and len(periods) > 0 and inside.all() and elapsed < 30)
    report(1, ok, f"{inside.sum()}/{len(periods)} cycles in ({bounds.T_lower:.6f}, "
                  f"{bounds.T_upper:.6f}) s, observed {periods.min():.3f}..{periods.max():.3f} s, "
                  f"{elapsed:.1f} s")
    assert ok


def test_criterion_2_racetrack_replication(report, tmp_path):
    cfg = load_config(CONFIGS / "racetrack.ini")
    cfg.out = tmp_path
    t0 = time.perf_counter()
    f = experiment.build_flow(cfg)
    region = experiment.resolve_region(cfg, f)
    bounds = experiment.region_bounds(f, region)
    near = (abs(bounds.T_lower / 42.67 - 1) <= 0.25 and abs(bounds.T_upper / 56.92 - 1) <= 0.25)
    assert experiment.check_monotone(f, region) is not None
    traj = experiment.run_one(cfg, f, region, cfg.controller, cfg.seed)
    rep = experiment.assess(traj, bounds, cfg.sim.dt, True)
    elapsed = time.perf_counter() - t0
    n_in = sum(rep.in_bounds(c) for c in rep.cycles)
    ok = near and len(rep.cycles) > 0 and n_in == len(rep.cycles) and elapsed < 60
    report(2, ok, f"band r in ({region.r_lower:.4f}, {region.r_upper:.4f}), bounds "
                  f"({bounds.T_lower:.2f}, {bounds.T_upper:.2f}) s, {n_in}/{len(rep.cycles)} "
                  f"cycles inside, {elapsed:.1f} s")
    assert ok


def test_criterion_3_effort_comparison(report, tmp_path):
    b = geometry.fit_implicit_boundary(geometry.stadium_points(), [((0.0, 0.0), -1.0)])
    nav = geometry.ShapeNavParams(geometry.default_R0())
    samples = fitting.synth_samples(b, nav, geometry.PotentialFieldParams(0.05, 0.19), 50,
                                    seed=0, noise=0.05)
    fitting.save_samples(samples, tmp_path / "samples.csv")
    text = (CONFIGS / "compare.ini").read_text().replace(
        "k_theta = 0.19", "k_theta = 0.19\nsamples = samples.csv")
    cfg = parse_config(text, base=tmp_path)
    t0 = time.perf_counter()
    rows = {r["controller"]: r for r in experiment.compare(cfg)}
    elapsed = time.perf_counter() - t0
    flow_e, wp_e = rows["flow-based"]["effort_mean"], rows["waypoint"]["effort_mean"]
    ok = flow_e < 0.5 and wp_e == 1.0 and rows["no-control"]["effort_total"] == 0.0 \
        and elapsed < 60
    report(3, ok, f"flow-based effort {flow_e:.3f}, waypoint {wp_e:.3f}, "
                  f"no control {rows['no-control']['effort_total']:.1f}, {elapsed:.1f} s")
    assert ok


def _analytic_flows():
    return {
        "vortex 1/r": (VortexFlow(VortexParams(ReciprocalProfile(1.0), 0.0)), (0.1, 10.0)),
        "vortex 2/(r+0.5)^1.5": (VortexFlow(VortexParams(ReciprocalProfile(2.0, 0.5, 1.5), 0.0)),
                                 (0.1, 10.0)),
        "double gyre": (DoubleGyreFlow(DoubleGyreParams(0.1, 1.0, 0.0)), (0.01, 0.49)),
    }


def test_criterion_4_period_monotonicity(report):
    rng = np.random.default_rng(4)
    failures = []
    for name, (f, search) in _analytic_flows().items():
        band = flow.monotone_band(f, r_search=search)
        assert band is not None
        for _ in range(10):
            r_i, r_j = np.sort(rng.uniform(*band, size=2))
            T_i, T_j = flow.orbit_period(f, r_i), flow.orbit_period(f, r_j)
            # strict increase; the 1e-9 s slack only matters for near-equal radii
            if not (r_i < r_j and T_i < T_j + 1e-9 and T_j > T_i):
                failures.append((name, r_i, r_j, T_i, T_j))
    ok = not failures
    report(4, ok, f"30 radius pairs over 3 flows, violations: {failures or 'none'}")
    assert ok


def test_criterion_5_gradients(report, stadium):
    b, nav = stadium.boundary, stadium.nav
    rng = np.random.default_rng(5)
    pts = []
    while len(pts) < 100:
        q = rng.uniform([-2.25, -1.5], [2.25, 1.5])
        if b.gamma(q) < 0:
            pts.append(q)
    pts = np.array(pts)
    h = 1e-6
    e = np.eye(2) * h

    def fd(fun):
        return np.stack([(fun(pts + e[k]) - fun(pts - e[k])) / (2 * h) for k in range(2)], -1)

    rel_g = np.linalg.norm(b.grad(pts) - fd(b.gamma), axis=1) / np.linalg.norm(b.grad(pts),
                                                                                  axis=1)
    an_phi = geometry.shape_navigation_grad(b, nav, pts)
    rel_p = np.linalg.norm(an_phi - fd(lambda q: geometry.shape_navigation(b, nav, q)),
                           axis=1) / np.linalg.norm(an_phi, axis=1)
    ok = rel_g.max() < 1e-5 and rel_p.max() < 1e-5
    report(5, ok, f"max relative error grad gamma {rel_g.max():.2e}, grad phi {rel_p.max():.2e}")
    assert ok


def test_criterion_6_gain_recovery(report):
    b = geometry.fit_implicit_boundary(geometry.stadium_points(), [((0.0, 0.0), -1.0)])
    nav = geometry.ShapeNavParams(geometry.default_R0())
    truth = geometry.PotentialFieldParams(0.3, 1.2)
    exact = fitting.fit_gains(fitting.synth_samples(b, nav, truth, 50, seed=0), b, nav)
    noisy = fitting.fit_gains(fitting.synth_samples(b, nav, truth, 50, seed=0, noise=0.05), b, nav)
    err_exact = max(abs(exact.K_r / 0.3 - 1), abs(exact.K_theta / 1.2 - 1))
    err_r, err_t = abs(noisy.K_r / 0.3 - 1), abs(noisy.K_theta / 1.2 - 1)
    ok = err_exact < 1e-8 and err_r < 0.1 and err_t < 0.1
    report(6, ok, f"noiseless relative error {err_exact:.1e}; 5% noise, 50 samples, seed 0: "
                  f"K_r {err_r:.1%}, K_theta {err_t:.1%}")
    assert ok


def test_criterion_7_integrator_order(report):
    f = VortexFlow(VortexParams(flow.rigid_profile(1.0), 0.0))

    def err(steps):
        traj = dynamics.integrate(f, NoControl(), (1.0, 0.0), 2 * math.pi,
                                  dt=2 * math.pi / steps)
        assert len(traj) == steps + 1
        return float(np.linalg.norm(traj.pos[-1] - [1.0, 0.0]))

    e1, e2 = err(100), err(200)
    ok = e1 / e2 >= 12
    report(7, ok, f"one-revolution error {e1:.3e} -> {e2:.3e}, ratio {e1 / e2:.2f}")
    assert ok


def test_criterion_8_circle_map_round_trip(report, stadium):
    rng = np.random.default_rng(8)
    r = rng.uniform(0.02, 0.999, 100) * stadium.cmap.r_max
    th = rng.uniform(0, 2 * math.pi, 100)
    q = geometry.inverse_circle_map(stadium.cmap, stadium.boundary, r, th)
    back = geometry.circle_map_point(stadium.cmap, stadium.boundary, q)
    err = np.linalg.norm(back - np.column_stack([r * np.cos(th), r * np.sin(th)]), axis=1)
    ok = err.max() < 1e-6
    report(8, ok, f"max round-trip error {err.max():.2e} m over 100 points")
    assert ok
