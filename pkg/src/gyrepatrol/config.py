"""Experiment configuration: INI-style sections, parsed into plain dataclasses.

Example::

    [flow]
    model = vortex
    omega_c = 1.0
    omega_power = 1.0
    mu = 0.02

    [region]
    r_lower = 1.0
    r_upper = 2.0

    [controller]
    type = hysteresis
    speed_lo = 0.01
    speed_hi = 0.04

    [simulation]
    dt = 0.01
    t_end = 5000

    [run]
    seed = 0
    seeds = 20
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


def _floats(text: str, n: int | None = None, what: str = "value") -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{what}: expected numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"{what}: expected {n} numbers, got {len(vals)}")
    return vals


@dataclass
class FlowSpec:
    model: str = "vortex"
    # vortex / rigid
    omega_c: float = 1.0
    omega_r0: float = 0.0
    omega_power: float = 1.0
    mu: float = 0.0
    center: tuple[float, float] = (0.0, 0.0)
    # double gyre
    A: float = 0.1
    s: float = 1.0
    # racetrack
    length: float = 4.5
    width: float = 3.0
    n_points: int = 64
    constraints: Path | None = None
    interior: tuple[tuple[float, float, float], ...] = ((0.0, 0.0, -1.0),)
    R0: float | None = None
    r_max: float | None = None
    g: tuple[float, float] = (0.0, 0.0)
    k_r: float = 0.05
    k_theta: float = 0.19
    samples: Path | None = None


@dataclass
class RegionSpec:
    r_lower: float | None = None
    r_upper: float | None = None
    t_lower: float | None = None
    t_upper: float | None = None
    search: tuple[float, float] | None = None
    epsilon: float = 0.05
    check_bounds: bool = True


@dataclass
class ControllerSpec:
    name: str = "controller"
    type: str = "hysteresis"
    u_max: float = 0.04
    speed_lo: float = 0.01
    speed_hi: float = 0.04
    push: str = "auto"
    waypoint_radius: float | None = None
    waypoint_spacing: float = 0.5
    capture_radius: float = 0.25
    clockwise: bool | None = None


@dataclass
class SimSpec:
    dt: float = 0.01
    t_end: float = 5000.0
    start: tuple[float, float] | None = None  # orbit coordinates (r, theta)
    x0: tuple[float, float] | None = None
    model: str = "kinematic"
    tau_m: float = 5.0
    workspace_radius: float | None = None
    decimate: int = 1


@dataclass
class ExperimentConfig:
    flow: FlowSpec = field(default_factory=FlowSpec)
    region: RegionSpec | None = None
    controllers: list[ControllerSpec] = field(default_factory=lambda: [ControllerSpec()])
    sim: SimSpec = field(default_factory=SimSpec)
    seed: int = 0
    seeds: int = 1
    out: Path = Path("out")
    source: Path | None = None

    @property
    def controller(self) -> ControllerSpec:
        return self.controllers[0]


_FLOAT = float
_TYPES = {
    FlowSpec: dict(omega_c=_FLOAT, omega_r0=_FLOAT, omega_power=_FLOAT, mu=_FLOAT, A=_FLOAT,
                   s=_FLOAT, length=_FLOAT, width=_FLOAT, n_points=int, R0=_FLOAT,
                   r_max=_FLOAT, k_r=_FLOAT, k_theta=_FLOAT),
    RegionSpec: dict(r_lower=_FLOAT, r_upper=_FLOAT, t_lower=_FLOAT, t_upper=_FLOAT,
                     epsilon=_FLOAT),
    ControllerSpec: dict(u_max=_FLOAT, speed_lo=_FLOAT, speed_hi=_FLOAT,
                         waypoint_radius=_FLOAT, waypoint_spacing=_FLOAT,
                         capture_radius=_FLOAT),
    SimSpec: dict(dt=_FLOAT, t_end=_FLOAT, tau_m=_FLOAT, workspace_radius=_FLOAT, decimate=int),
}


def _fill(obj, section: configparser.SectionProxy, base: Path):
    types = _TYPES[type(obj)]
    for key, raw in section.items():
        if key not in obj.__dataclass_fields__ or key == "name":
            raise ConfigError(f"[{section.name}] unknown key {key!r}")
        where = f"[{section.name}] {key}"
        if key in types:
            try:
                setattr(obj, key, types[key](raw))
            except ValueError:
                raise ConfigError(f"{where}: cannot parse {raw!r}") from None
        elif key in ("center", "g", "start", "x0"):
            setattr(obj, key, _floats(raw, 2, where))
        elif key == "search":
            setattr(obj, key, _floats(raw, 2, where))
        elif key == "interior":
            triples = []
            for part in raw.split(";"):
                if part.strip():
                    triples.append(_floats(part, 3, where))
            setattr(obj, key, tuple(triples))
        elif key in ("constraints", "samples"):
            p = Path(raw)
            setattr(obj, key, p if p.is_absolute() else base / p)
        elif key in ("check_bounds", "clockwise"):
            setattr(obj, key, section.getboolean(key))
        else:
            setattr(obj, key, raw.strip())


def parse_config(text: str, base: Path = Path(".")) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    cfg = ExperimentConfig()
    known = {"flow", "region", "controller", "simulation", "run", "compare"}
    for name in cp.sections():
        if name not in known and not name.startswith("controller:"):
            raise ConfigError(f"unknown section [{name}]")
    if cp.has_section("flow"):
        _fill(cfg.flow, cp["flow"], base)
    if cp.has_section("region"):
        cfg.region = RegionSpec()
        _fill(cfg.region, cp["region"], base)
    if cp.has_section("simulation"):
        _fill(cfg.sim, cp["simulation"], base)
    named = {}
    for name in cp.sections():
        if name.startswith("controller:"):
            spec = ControllerSpec(name=name.split(":", 1)[1].strip())
            _fill(spec, cp[name], base)
            named[spec.name] = spec
    if cp.has_section("controller"):
        spec = ControllerSpec()
        _fill(spec, cp["controller"], base)
        spec.name = spec.type
        cfg.controllers = [spec]
    if cp.has_section("compare"):
        names = [n.strip() for n in cp["compare"].get("controllers", "").split(",") if n.strip()]
        missing = [n for n in names if n not in named]
        if missing:
            raise ConfigError(f"[compare] controllers without a section: {missing}")
        cfg.controllers = [named[n] for n in names]
    elif named and not cp.has_section("controller"):
        cfg.controllers = list(named.values())
    if cp.has_section("run"):
        run = cp["run"]
        for key in run:
            if key not in ("seed", "seeds", "out"):
                raise ConfigError(f"[run] unknown key {key!r}")
        try:
            cfg.seed = run.getint("seed", cfg.seed)
            cfg.seeds = run.getint("seeds", cfg.seeds)
        except ValueError as exc:
            raise ConfigError(f"[run] {exc}") from None
        if "out" in run:
            cfg.out = Path(run["out"])
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cfg = parse_config(path.read_text(), base=path.parent)
    cfg.source = path
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    f = cfg.flow
    if f.model not in ("vortex", "rigid", "double_gyre", "racetrack", "zero"):
        raise ConfigError(f"[flow] unknown model {f.model!r}")
    for p in (f.constraints, f.samples):
        if p is not None and not p.exists():
            raise ConfigError(f"[flow] referenced file does not exist: {p}")
    if cfg.sim.dt <= 0:
        raise ConfigError("[simulation] dt must be positive")
    if cfg.sim.t_end <= cfg.sim.dt:
        raise ConfigError("[simulation] t_end must exceed dt (zero-duration run)")
    if cfg.sim.model not in ("kinematic", "inertial"):
        raise ConfigError(f"[simulation] unknown model {cfg.sim.model!r}")
    if cfg.sim.decimate < 1:
        raise ConfigError("[simulation] decimate must be >= 1")
    if cfg.seeds < 1:
        raise ConfigError("[run] seeds must be >= 1")
    r = cfg.region
    if r is not None:
        by_r = r.r_lower is not None or r.r_upper is not None
        by_t = r.t_lower is not None or r.t_upper is not None
        if by_r == by_t:
            raise ConfigError("[region] give either r_lower/r_upper or t_lower/t_upper")
        lo, hi = (r.r_lower, r.r_upper) if by_r else (r.t_lower, r.t_upper)
        if lo is None or hi is None:
            raise ConfigError("[region] both bounds are required")
        if by_r and hi - lo < r.epsilon:
            raise ConfigError(f"[region] band width {hi - lo:g} below epsilon {r.epsilon:g}")
        if by_t and hi <= lo:
            raise ConfigError("[region] t_upper must exceed t_lower")
    for c in cfg.controllers:
        if c.type not in ("hysteresis", "bang_bang", "waypoint", "none"):
            raise ConfigError(f"[controller] unknown type {c.type!r}")
        if c.push not in ("auto", "inward", "outward"):
            raise ConfigError("[controller] push must be auto, inward or outward")
