"""Command-line runner: ``gyrepatrol {simulate,verify-theorem,compare,fit,boundary,synth}``.

Exit codes: 0 when every requested check passes, 1 when a check fails,
2 on configuration, input or simulation errors.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from gyrepatrol import dynamics, experiment, fitting, geometry
from gyrepatrol.config import ConfigError, load_config

log = logging.getLogger("gyrepatrol")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = Path(args.out)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load(args)
    f = experiment.build_flow(cfg)
    region = experiment.resolve_region(cfg, f) if cfg.region is not None else None
    bounds = experiment.region_bounds(f, region) if region is not None else None
    spec = cfg.controller
    try:
        traj = experiment.run_one(cfg, f, region, spec, cfg.seed)
    except dynamics.SimulationAborted as exc:
        dynamics.write_csv(exc.trajectory, cfg.out / "trajectory.csv", cfg.sim.decimate)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    check = cfg.region is not None and cfg.region.check_bounds and spec.type != "none"
    rep = experiment.assess(traj, bounds, cfg.sim.dt, check)
    dynamics.write_csv(traj, cfg.out / "trajectory.csv", cfg.sim.decimate)
    rep.write(cfg.out)
    print(rep.text(), end="")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify_theorem(args) -> int:
    cfg = _load(args)
    bounds, seeds, reports = experiment.verify_theorem(cfg, jobs=args.jobs)
    periods = np.concatenate([r.periods for r in reports]) if reports else np.array([])
    n_in = sum(sum(r.in_bounds(c) for c in r.cycles) for r in reports)
    cfg.out.mkdir(parents=True, exist_ok=True)
    with (cfg.out / "verify_cycles.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "cycle", "T", "r_min", "r_max", "effort_fraction", "in_bounds"])
        for seed, rep in zip(seeds, reports):
            for i, c in enumerate(rep.cycles):
                w.writerow([seed, i, f"{c.T:.6f}", f"{c.r_min:.9f}", f"{c.r_max:.9f}",
                            f"{c.effort_fraction:.6f}", int(rep.in_bounds(c))])
    ok = len(periods) > 0 and n_in == len(periods)
    lines = [
        f"band               r in ({bounds.r_lower:.6f}, {bounds.r_upper:.6f}) m",
        f"period bounds      ({bounds.T_lower:.6f}, {bounds.T_upper:.6f}) s, slack {cfg.sim.dt:g} s",
        f"seeds              {len(seeds)} ({seeds[0]}..{seeds[-1]})",
        f"complete cycles    {len(periods)}",
        f"inside bounds      {n_in}",
    ]
    if len(periods):
        lines.append(f"observed periods   min {periods.min():.6f} s, max {periods.max():.6f} s")
    lines.append(f"RESULT {'PASS' if ok else 'FAIL'}")
    text = "\n".join(lines) + "\n"
    (cfg.out / "verify_report.txt").write_text(text)
    print(text, end="")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_compare(args) -> int:
    cfg = _load(args)
    if len(cfg.controllers) < 2:
        raise ConfigError("compare needs at least two controllers ([compare] controllers = a, b)")
    rows = experiment.compare(cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    keys = list(rows[0])
    with (cfg.out / "compare.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for row in rows:
            w.writerow([f"{v:.6g}" if isinstance(v, float) else v for v in row.values()])
    head = f"{'controller':<16}{'cycles':>7}{'period [s]':>22}{'effort/cycle':>20}{'overall':>9}"
    lines = [head]
    for r in rows:
        lines.append(f"{r['controller']:<16}{r['cycles']:>7}"
                     f"{r['period_mean']:>12.2f} +- {r['period_std']:<6.2f}"
                     f"{r['effort_mean']:>10.3f} +- {r['effort_std']:<6.3f}"
                     f"{r['effort_total']:>9.3f}")
    text = "\n".join(lines) + "\n"
    (cfg.out / "compare.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


def _boundary_and_nav(cfg):
    b = experiment.build_boundary(cfg.flow)
    R0 = cfg.flow.R0 if cfg.flow.R0 is not None else geometry.default_R0(cfg.flow.length,
                                                                          cfg.flow.width)
    return b, geometry.ShapeNavParams(R0)


def cmd_fit(args) -> int:
    cfg = _load(args)
    samples_path = Path(args.samples)
    if not samples_path.exists():
        raise ConfigError(f"samples file not found: {samples_path}")
    b, nav = _boundary_and_nav(cfg)
    samples = fitting.load_samples(samples_path, b)
    fit = fitting.fit_gains(samples, b, nav)
    text = (f"samples      {fit.sample_count}\n"
            f"K_r          {fit.K_r:.12g}\n"
            f"K_theta      {fit.K_theta:.12g}\n"
            f"residual_rms {fit.residual_rms:.6g} m/s\n")
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "fit.txt").write_text(text)
    with (cfg.out / "fit.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["K_r", "K_theta", "residual_rms", "sample_count"])
        w.writerow([repr(fit.K_r), repr(fit.K_theta), repr(fit.residual_rms), fit.sample_count])
    print(text, end="")
    return EXIT_OK


def cmd_boundary(args) -> int:
    cfg = _load(args)
    b, _ = _boundary_and_nav(cfg)
    pts = b.on_points
    pad = 0.1 * np.ptp(pts, axis=0).max()
    lo, hi = pts.min(axis=0) - pad, pts.max(axis=0) + pad
    xs = np.linspace(lo[0], hi[0], args.grid)
    ys = np.linspace(lo[1], hi[1], args.grid)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    G = b.gamma(np.stack([X, Y], axis=-1))
    cfg.out.mkdir(parents=True, exist_ok=True)
    with (cfg.out / "gamma_grid.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1", "x2", "gamma"])
        for x, y, g in zip(X.ravel(), Y.ravel(), G.ravel()):
            w.writerow([f"{x:.6f}", f"{y:.6f}", f"{g:.9g}"])
    inner = [((row[0], row[1]), row[2]) for row in b.interior]
    geometry.save_constraints(cfg.out / "constraints.txt", b.on_points, inner)
    print(f"wrote {cfg.out / 'gamma_grid.csv'} ({args.grid}x{args.grid}) and "
          f"{cfg.out / 'constraints.txt'}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = _load(args)
    b, nav = _boundary_and_nav(cfg)
    gains = geometry.PotentialFieldParams(cfg.flow.k_r, cfg.flow.k_theta)
    samples = fitting.synth_samples(b, nav, gains, args.n, seed=cfg.seed, noise=args.noise)
    path = Path(args.samples)
    fitting.save_samples(samples, path)
    print(f"wrote {len(samples)} samples to {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gyrepatrol",
                                 description="Flow-based patrol control in gyre-like flows")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override [run] seed")
        p.add_argument("--out", default=None, help="output directory")
        return p

    common(sub.add_parser("simulate", help="run one simulation")).set_defaults(func=cmd_simulate)
    p = common(sub.add_parser("verify-theorem", help="seeded period-bound verification"))
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_verify_theorem)
    common(sub.add_parser("compare", help="compare controllers")).set_defaults(func=cmd_compare)
    p = common(sub.add_parser("fit", help="fit potential-field gains to samples"))
    p.add_argument("--samples", required=True, help="CSV with header x1,x2,v1,v2")
    p.set_defaults(func=cmd_fit)
    p = common(sub.add_parser("boundary", help="fit the boundary and dump gamma on a grid"))
    p.add_argument("--grid", type=int, default=101)
    p.set_defaults(func=cmd_boundary)
    p = common(sub.add_parser("synth", help="write synthetic velocity samples"))
    p.add_argument("--samples", required=True, help="output CSV")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--noise", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, fitting.SampleFileError, fitting.RankDeficientError,
            geometry.SingularSystemError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
