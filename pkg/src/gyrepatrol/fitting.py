"""Least-squares fit of the potential-field gains to sparse velocity samples."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gyrepatrol.geometry import (
    ImplicitBoundary,
    PotentialFieldParams,
    ShapeNavParams,
    curl_term,
    shape_navigation_grad,
)

log = logging.getLogger(__name__)

SAMPLE_HEADER = ["x1", "x2", "v1", "v2"]


class SampleFileError(ValueError):
    pass


class RankDeficientError(ValueError):
    pass


@dataclass(frozen=True)
class VelocitySample:
    pos: tuple[float, float]
    vel: tuple[float, float]


@dataclass(frozen=True)
class GainFit:
    K_r: float
    K_theta: float
    residual_rms: float
    sample_count: int

    @property
    def params(self) -> PotentialFieldParams:
        return PotentialFieldParams(self.K_r, self.K_theta)


def load_samples(path, boundary: ImplicitBoundary | None = None) -> list[VelocitySample]:
    """Read an ``x1,x2,v1,v2`` CSV; samples outside the boundary are dropped with a warning."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SampleFileError(f"{path}: empty file")
    if [h.strip() for h in rows[0]] != SAMPLE_HEADER:
        raise SampleFileError(f"{path}:1: expected header {','.join(SAMPLE_HEADER)}")
    samples = []
    for lineno, row in enumerate(rows[1:], 2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise SampleFileError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise SampleFileError(f"{path}:{lineno}: non-numeric field") from None
        if not np.all(np.isfinite(vals)):
            raise SampleFileError(f"{path}:{lineno}: non-finite value")
        samples.append(VelocitySample((vals[0], vals[1]), (vals[2], vals[3])))
    if not samples:
        raise SampleFileError(f"{path}: no samples")
    if boundary is not None:
        gam = boundary.gamma(np.array([s.pos for s in samples]))
        kept = []
        for s, g in zip(samples, gam):
            if g > 0:
                log.warning("sample at (%g, %g) lies outside the boundary; skipped", *s.pos)
            else:
                kept.append(s)
        samples = kept
    return samples


def save_samples(samples, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_HEADER)
        for s in samples:
            w.writerow([repr(float(v)) for v in (*s.pos, *s.vel)])


def _basis(boundary, nav, pos):
    return -shape_navigation_grad(boundary, nav, pos), -curl_term(boundary, pos)


def fit_gains(samples, boundary: ImplicitBoundary, nav: ShapeNavParams) -> GainFit:
    """Solve ``min sum |K_r b_r(q) + K_theta b_theta(q) - v|^2`` for the two gains."""
    pos = np.array([s.pos for s in samples], dtype=float).reshape(-1, 2)
    vel = np.array([s.vel for s in samples], dtype=float).reshape(-1, 2)
    if len(np.unique(pos, axis=0)) < 2:
        raise RankDeficientError("need samples at two or more distinct locations")
    b_r, b_t = _basis(boundary, nav, pos)
    A = np.column_stack([b_r.reshape(-1), b_t.reshape(-1)])
    y = vel.reshape(-1)
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise RankDeficientError("basis fields are parallel at every sample")
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = A @ coef - y
    rms = float(np.sqrt(np.mean(np.sum(res.reshape(-1, 2) ** 2, axis=1))))
    return GainFit(float(coef[0]), float(coef[1]), rms, len(pos))


def synth_samples(boundary: ImplicitBoundary, nav: ShapeNavParams, gains: PotentialFieldParams,
                  n: int, seed: int = 0, noise: float = 0.0) -> list[VelocitySample]:
    """``n`` uniformly drawn interior points with model velocities.

    Gaussian noise with standard deviation ``noise * |v|`` is added per
    component.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    pts = boundary.on_points
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    out = np.empty((0, 2))
    while len(out) < n:
        cand = rng.uniform(lo, hi, size=(4 * n, 2))
        out = np.vstack([out, cand[boundary.gamma(cand) < 0]])
    pos = out[:n]
    b_r, b_t = _basis(boundary, nav, pos)
    vel = gains.K_r * b_r + gains.K_theta * b_t
    if noise > 0:
        speed = np.linalg.norm(vel, axis=1, keepdims=True)
        vel = vel + noise * speed * rng.standard_normal(vel.shape)
    return [VelocitySample(tuple(p), tuple(v)) for p, v in zip(pos, vel)]
