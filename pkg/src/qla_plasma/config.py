"""TOML run configuration with strict keys.

Example::

    [lattice]
    n_px = 4
    n_py = 4
    delta = 0.0625

    [profile]            # background values; every key optional
    omega_pe = 2.0
    nu = 0.1

    [[profile.blobs]]
    center = [0.5, 0.5]
    sigma = 0.1
    amplitude_pe = 1.0
    support_radius = 0.25

    [initial]
    kind = "plane_wave"  # plane_wave | random | file
    k = [1, 0]           # mode numbers: k = 2 pi m / L
    polarization = "vacuum"

    [run]
    n_steps = 100

    [output]
    directory = "out"
"""

from __future__ import annotations

import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .lattice import LatticeSpec, PlasmaProfile
from .operators import CALIBRATED_KAPPA

log = logging.getLogger(__name__)

POLARIZATION_NAMES = ("vacuum", "O-mode", "X-mode")
INITIAL_KINDS = ("plane_wave", "random", "file")
OUTPUT_FORMATS = ("csv", "snapshots")


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


@dataclass
class LatticeConfig:
    n_px: int
    n_py: int
    delta: float
    origin_x: float = 0.0
    origin_y: float = 0.0


@dataclass
class BlobConfig:
    center: tuple[float, float]
    sigma: float
    support_radius: float
    amplitude_pi: float = 0.0
    amplitude_pe: float = 0.0


@dataclass
class ProfileConfig:
    omega_pi: float = 0.0
    omega_pe: float = 0.0
    omega_ci: float = 0.0
    omega_ce: float = 0.0
    nu: float = 0.0
    blobs: list[BlobConfig] = field(default_factory=list)


@dataclass
class InitialConfig:
    kind: str = "plane_wave"
    k: tuple[int, int] = (1, 0)
    polarization: str = "vacuum"
    branch: str = "upper"
    envelope_width: float = 0.0
    file: str = ""
    seed: int = 0


@dataclass
class RunBlock:
    n_steps: int = 100
    T: float = 0.0
    snapshot_every: int = 0
    seed: int = 0
    kappa_kinetic: float = CALIBRATED_KAPPA
    dt: float = 0.0
    monte_carlo: bool = False


@dataclass
class OutputConfig:
    directory: str = "qla_out"
    formats: tuple[str, ...] = ("csv",)


@dataclass
class RunConfig:
    lattice: LatticeConfig
    profile: ProfileConfig
    initial: InitialConfig
    run: RunBlock
    output: OutputConfig
    source: str = ""
    defaults_applied: list[str] = field(default_factory=list)

    def lattice_spec(self) -> LatticeSpec:
        c = self.lattice
        return LatticeSpec(c.n_px, c.n_py, c.delta, c.origin_x, c.origin_y)

    def plasma_profile(self) -> PlasmaProfile:
        return build_profile(self.lattice_spec(), self.profile)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("defaults_applied")
        return d


_SECTIONS = {
    "lattice": LatticeConfig,
    "profile": ProfileConfig,
    "initial": InitialConfig,
    "run": RunBlock,
    "output": OutputConfig,
}
_REQUIRED = {"lattice": ("n_px", "n_py", "delta"), "blob": ("center", "sigma", "support_radius")}


def _number(value, key: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    if not np.isfinite(value):
        raise ConfigError(f"{key}: value must be finite")
    return float(value)


def _coerce(name: str, default, value, key: str):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        return _number(value, key, integer=True)
    if isinstance(default, float):
        return _number(value, key)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected a list, got {value!r}")
        return tuple(value)
    return value


def _fill(cls, table: dict, section: str, defaults_applied: list[str], required=()):
    known = {f.name: f for f in cls.__dataclass_fields__.values()}
    for key in table:
        if key not in known or key == "blobs" and cls is not ProfileConfig:
            raise ConfigError(f"unknown key '{section}.{key}'")
    for key in required:
        if key not in table:
            raise ConfigError(f"missing required key '{section}.{key}'")
    probe = cls(**{k: _placeholder(known[k]) for k in required}) if required else cls()
    values = {}
    for name in known:
        default = getattr(probe, name)
        if name in table:
            if name == "blobs":
                continue
            values[name] = _coerce(name, default, table[name], f"{section}.{name}")
        elif name not in required and name != "blobs":
            defaults_applied.append(f"{section}.{name} = {default!r}")
    return values


def _placeholder(f):
    return {"int": 1, "float": 1.0, "tuple[float, float]": (0.0, 0.0)}.get(str(f.type), 1.0)


def parse_config(path) -> RunConfig:
    """Read and validate a TOML run configuration."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from None
    return config_from_dict(data, base_dir=path.parent, source=str(path))


def config_from_dict(data: dict, base_dir: Path | str = ".", source: str = "") -> RunConfig:
    for key in data:
        if key not in _SECTIONS:
            raise ConfigError(f"unknown section '{key}'")
    if "lattice" not in data:
        raise ConfigError("missing required section 'lattice'")
    applied: list[str] = []
    blocks = {}
    for name, cls in _SECTIONS.items():
        table = data.get(name, {})
        if not isinstance(table, dict):
            raise ConfigError(f"section '{name}' must be a table")
        if name not in data and name != "lattice":
            applied.append(f"[{name}] section defaults")
        values = _fill(cls, table, name, applied, _REQUIRED.get(name, ()))
        if name == "profile":
            values["blobs"] = [_parse_blob(b, i, applied) for i, b in enumerate(table.get("blobs", []))]
        blocks[name] = cls(**values)
    cfg = RunConfig(source=source, defaults_applied=applied, **blocks)
    _validate(cfg, Path(base_dir))
    for line in applied:
        log.info("default applied: %s", line)
    return cfg


def _parse_blob(table, index: int, applied) -> BlobConfig:
    section = f"profile.blobs[{index}]"
    if not isinstance(table, dict):
        raise ConfigError(f"{section} must be a table")
    values = _fill(BlobConfig, table, section, applied, _REQUIRED["blob"])
    center = values["center"]
    if len(center) != 2:
        raise ConfigError(f"{section}.center: expected [x, y]")
    values["center"] = tuple(_number(c, f"{section}.center") for c in center)
    return BlobConfig(**values)


def _validate(cfg: RunConfig, base_dir: Path) -> None:
    lat = cfg.lattice
    if lat.n_px < 1 or lat.n_py < 1:
        raise ConfigError("lattice.n_px, lattice.n_py: constraint >= 1 violated")
    if not lat.delta > 0:
        raise ConfigError(f"lattice.delta: constraint delta > 0 violated (got {lat.delta})")
    p = cfg.profile
    for name in ("omega_pi", "omega_pe"):
        if getattr(p, name) < 0:
            raise ConfigError(f"profile.{name}: constraint {name} >= 0 violated (got {getattr(p, name)})")
    if p.nu < 0:
        raise ConfigError(f"profile.nu: constraint nu >= 0 violated (got {p.nu})")
    for i, b in enumerate(p.blobs):
        if not b.sigma > 0:
            raise ConfigError(f"profile.blobs[{i}].sigma: constraint sigma > 0 violated (got {b.sigma})")
        if b.support_radius < 0:
            raise ConfigError(f"profile.blobs[{i}].support_radius: constraint >= 0 violated")
    ini = cfg.initial
    if ini.kind not in INITIAL_KINDS:
        raise ConfigError(f"initial.kind: must be one of {INITIAL_KINDS}, got {ini.kind!r}")
    if ini.polarization not in POLARIZATION_NAMES:
        raise ConfigError(f"initial.polarization: must be one of {POLARIZATION_NAMES}, got {ini.polarization!r}")
    if ini.branch not in ("upper", "lower"):
        raise ConfigError(f"initial.branch: must be 'upper' or 'lower', got {ini.branch!r}")
    if len(ini.k) != 2 or any(isinstance(m, bool) or int(m) != m for m in ini.k):
        raise ConfigError(f"initial.k: expected two integer mode numbers, got {list(ini.k)!r}")
    ini.k = tuple(int(m) for m in ini.k)
    if ini.envelope_width < 0:
        raise ConfigError("initial.envelope_width: constraint >= 0 violated")
    if ini.kind == "file":
        if not ini.file:
            raise ConfigError("initial.file: required when initial.kind = 'file'")
        f = Path(ini.file)
        if not f.is_absolute():
            f = base_dir / f
        if not f.exists():
            raise ConfigError(f"initial.file: {f} does not exist")
        ini.file = str(f)
    r = cfg.run
    if r.n_steps < 1 and r.T <= 0:
        raise ConfigError("run.n_steps: constraint n_steps >= 1 violated")
    if r.T < 0 or r.dt < 0:
        raise ConfigError("run.T, run.dt: constraint >= 0 violated")
    if r.snapshot_every < 0:
        raise ConfigError("run.snapshot_every: constraint >= 0 violated")
    bad = [f for f in cfg.output.formats if f not in OUTPUT_FORMATS]
    if bad:
        raise ConfigError(f"output.formats: unknown format(s) {bad}; allowed {OUTPUT_FORMATS}")
    try:
        cfg.plasma_profile()
    except ValueError as exc:
        raise ConfigError(f"profile: {exc}") from None


def build_profile(lattice: LatticeSpec, pc: ProfileConfig) -> PlasmaProfile:
    """Background plus the sum of truncated Gaussian blobs; the support is their union."""
    x, y = lattice.coordinates()
    omega_pi = np.full(lattice.n_sites, pc.omega_pi)
    omega_pe = np.full(lattice.n_sites, pc.omega_pe)
    support = np.zeros(lattice.n_sites, dtype=bool)
    for b in pc.blobs:
        r2 = (x - b.center[0]) ** 2 + (y - b.center[1]) ** 2
        inside = r2 <= b.support_radius ** 2
        if b.amplitude_pi == 0 and b.amplitude_pe == 0:
            continue
        bump = np.where(inside, np.exp(-r2 / (2.0 * b.sigma ** 2)), 0.0)
        omega_pi = omega_pi + b.amplitude_pi * bump
        omega_pe = omega_pe + b.amplitude_pe * bump
        support |= inside
    return PlasmaProfile(omega_pi, omega_pe, pc.omega_ci, pc.omega_ce, pc.nu,
                         background=(pc.omega_pi, pc.omega_pe), support=tuple(np.flatnonzero(support)))
