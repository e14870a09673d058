"""Scenario files (TOML) and their validated in-memory form."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from oceansim.errors import ConfigError
from oceansim.interactive import FdmParams, MaskParams
from oceansim.spectra import SpectrumParams


@dataclass(frozen=True)
class OceanConfig:
    N: int = 256
    lengths: tuple = (256.0, 16.0, 4.0)
    cutoffs: tuple | None = None
    choppiness: float = 1.0
    n_iter: int = 4


@dataclass(frozen=True)
class VelocityConfig:
    y_min: float = -125.0
    y_max: float = 4.5
    d: int = 8
    scheme: str = "log"
    interp: str = "exp"
    stride: int = 1


@dataclass(frozen=True)
class FluidConfig:
    rho_water: float = 1025.0
    rho_air: float = 1.204
    wind: tuple = (0.0, 0.0, 0.0)
    density_depths: tuple | None = None
    density_values: tuple | None = None


@dataclass(frozen=True)
class OutputConfig:
    trajectory: bool = True
    forces: bool = True
    zones: bool = True
    snapshot_stride: int = 0
    figures: bool = True


@dataclass(frozen=True)
class BodyConfig:
    name: str = "body"
    mesh: str = "box"
    size: tuple = (1.0, 1.0, 1.0)
    density: float | None = 500.0
    mass: float | None = None
    inertia: str = "mesh"
    cd_water: float = 1.0
    cd_air: float = 1.0
    position: tuple = (0.0, 0.0, 0.0)
    yaw_deg: float = 0.0
    velocity: tuple = (0.0, 0.0, 0.0)
    angular_velocity: tuple = (0.0, 0.0, 0.0)
    thrust: float = 0.0
    angular_damping: float = 0.0
    interactive: bool = True
    mask: MaskParams = field(default_factory=MaskParams)


@dataclass(frozen=True)
class Scenario:
    spectrum: SpectrumParams = field(default_factory=SpectrumParams)
    ocean: OceanConfig = field(default_factory=OceanConfig)
    velocity: VelocityConfig = field(default_factory=VelocityConfig)
    fdm: dict = field(default_factory=dict)
    fluid: FluidConfig = field(default_factory=FluidConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    bodies: tuple = ()
    dt: float = 1.0 / 60.0
    duration: float = 1.0
    seed: int = 0
    base_dir: Path = field(default_factory=Path.cwd)
    name: str = "scenario"

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if not self.duration >= self.dt:
            raise ConfigError("duration must be >= dt")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=int(seed), spectrum=replace(self.spectrum, rng_seed=int(seed)))

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


_TOP_KEYS = {"seed", "dt", "duration", "name", "spectrum", "ocean", "velocity", "fdm", "fluid", "output", "bodies"}
_FDM_KEYS = {f.name for f in fields(FdmParams)}


def _locate(text: str, key: str):
    """Line and column of the first assignment to ``key`` (1-based)."""
    pat = re.compile(rf"^\s*({re.escape(key)})\s*=", re.M)
    m = pat.search(text)
    if not m:
        pat = re.compile(rf"^\s*\[+\s*{re.escape(key)}\s*\]+", re.M)
        m = pat.search(text)
    if not m:
        return None
    line = text.count("\n", 0, m.start()) + 1
    col = m.start(1) - (text.rfind("\n", 0, m.start()) + 1) + 1 if m.lastindex else 1
    return line, col


def _error(text: str, key: str, msg: str) -> ConfigError:
    loc = _locate(text, key) if text else None
    where = f"line {loc[0]}, column {loc[1]}: " if loc else ""
    return ConfigError(f"{where}{msg}")


def _build(cls, table: dict, text: str, section: str, convert=None):
    names = {f.name for f in fields(cls)}
    unknown = set(table) - names
    if unknown:
        key = sorted(unknown)[0]
        raise _error(text, key, f"unknown key {key!r} in [{section}]")
    values = dict(table)
    if convert:
        values = convert(values)
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        key = next((k for k in table if k in msg), next(iter(table), section))
        raise _error(text, key, f"[{section}] {exc}") from exc


def _tuples(values: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}


def parse_scenario(text: str, base_dir=None, name: str = "scenario") -> Scenario:
    """Parse TOML text into a :class:`Scenario`. Errors carry line and column."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(exc)) from exc
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise _error(text, key, f"unknown top-level key {key!r}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise _error(text, "seed", "seed must be an unsigned 64-bit integer")

    spec = dict(raw.get("spectrum", {}))
    spec.setdefault("rng_seed", seed)
    spectrum = _build(SpectrumParams, spec, text, "spectrum")
    ocean = _build(OceanConfig, raw.get("ocean", {}), text, "ocean", _tuples)
    velocity = _build(VelocityConfig, raw.get("velocity", {}), text, "velocity")
    fluid = _build(FluidConfig, raw.get("fluid", {}), text, "fluid", _tuples)
    output = _build(OutputConfig, raw.get("output", {}), text, "output")

    fdm_table = dict(raw.get("fdm", {}))
    unknown = set(fdm_table) - _FDM_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise _error(text, key, f"unknown key {key!r} in [fdm]")

    bodies = []
    for i, b in enumerate(raw.get("bodies", [])):
        b = dict(b)
        mask = b.pop("mask", {})
        body = _build(BodyConfig, b, text, f"bodies.{i}", _tuples)
        mask_p = _build(MaskParams, mask, text, f"bodies.{i}.mask")
        bodies.append(replace(body, mask=mask_p))
    names = [b.name for b in bodies]
    if len(set(names)) != len(names):
        raise _error(text, "name", "body names must be unique")

    try:
        sc = Scenario(
            spectrum=spectrum, ocean=ocean, velocity=velocity, fluid=fluid, output=output,
            fdm=fdm_table,
            bodies=tuple(bodies), dt=float(raw.get("dt", 1.0 / 60.0)), duration=float(raw.get("duration", 1.0)),
            seed=seed, base_dir=Path(base_dir) if base_dir else Path.cwd(), name=str(raw.get("name", name)),
        )
    except ConfigError as exc:
        key = "dt" if "dt" in str(exc) else "duration"
        raise _error(text, key, str(exc)) from exc
    _check(sc, text)
    return sc


def _check(sc: Scenario, text: str) -> None:
    o = sc.ocean
    if o.n_iter < 1:
        raise _error(text, "n_iter", "n_iter must be >= 1")
    v = sc.velocity
    if v.scheme not in ("log", "uniform"):
        raise _error(text, "scheme", f"unknown velocity scheme {v.scheme!r}")
    if v.interp not in ("exp", "linear"):
        raise _error(text, "interp", f"unknown interpolation {v.interp!r}")
    if not v.y_min < min(0.0, v.y_max):
        raise _error(text, "y_min", "y_min must be negative and below y_max")
    if v.d < 2 or v.stride < 1:
        raise _error(text, "d", "velocity needs d >= 2 and stride >= 1")
    f = sc.fluid
    if (f.density_depths is None) != (f.density_values is None):
        raise _error(text, "density_depths", "density_depths and density_values go together")
    if len(f.wind) != 3:
        raise _error(text, "wind", "wind must have three components")
    for b in sc.bodies:
        if b.mass is None and b.density is None:
            raise _error(text, "density", f"body {b.name!r} needs a mass or a density")
        if b.mass is not None and not b.mass > 0:
            raise _error(text, "mass", f"body {b.name!r}: mass must be > 0")
        if b.density is not None and not b.density > 0:
            raise _error(text, "density", f"body {b.name!r}: density must be > 0")
        if b.inertia not in ("mesh", "box"):
            raise _error(text, "inertia", f"body {b.name!r}: inertia must be 'mesh' or 'box'")
        if len(b.position) != 3 or len(b.velocity) != 3:
            raise _error(text, "position", f"body {b.name!r}: vectors need three components")


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_scenario(text, base_dir=path.parent, name=path.stem)


def bundled_scenario(name: str) -> Path:
    """Path of a scenario shipped with the package (``one-solid`` etc.)."""
    p = Path(__file__).parent / "scenarios" / f"{name}.toml"
    if not p.exists():
        raise ConfigError(f"no bundled scenario named {name!r}")
    return p


def density_table(fluid: FluidConfig):
    if fluid.density_depths is None:
        return None
    return np.asarray(fluid.density_depths, dtype=float), np.asarray(fluid.density_values, dtype=float)
