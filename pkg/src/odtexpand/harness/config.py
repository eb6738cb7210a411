"""Run configuration: flat ``key = value`` files with dotted keys, CLI overrides."""
from dataclasses import asdict, dataclass, fields, replace
import math
from typing import Iterable, Optional

from ..protocols import ExpansionTask
from ..trap_model import AtomSpecies, BeamGeometry
from ..units import RB87_MASS

AXES = ("longitudinal", "radial", "3d")

# dotted key -> RunConfig field
KEYS = {
    "atom.mass_kg": "mass_kg",
    "laser.wavelength_m": "wavelength_m",
    "beam.waist_m": "waist_m",
    "trap.f0z_hz": "f0z_hz",
    "trap.ffz_hz": "ffz_hz",
    "protocol.kind": "protocol",
    "protocol.tf_s": "tf_s",
    "protocol.allow_repulsive": "allow_repulsive",
    "state.n": "n",
    "state.nu": "nu",
    "run.axis": "axis",
    "run.potential": "potential",
    "grid.nz": "nz",
    "grid.nr": "nr",
    "grid.dt_s": "dt_s",
    "grid.steps_per_period": "steps_per_period",
}


def _parse_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class RunConfig:
    """One propagation, in SI inputs. Grid sizes of 0 pick the defaults."""

    mass_kg: float = RB87_MASS
    wavelength_m: float = 1.06e-6
    waist_m: float = 3e-6
    f0z_hz: float = 2500.0
    ffz_hz: float = 250.0
    protocol: str = "invariant"
    tf_s: float = 1e-3
    allow_repulsive: bool = False
    n: int = 0
    nu: int = 0
    axis: str = "longitudinal"
    potential: str = "full"
    nz: int = 0
    nr: int = 0
    dt_s: Optional[float] = None
    steps_per_period: int = 200

    def __post_init__(self):
        for name in ("mass_kg", "wavelength_m", "waist_m", "f0z_hz", "ffz_hz", "tf_s"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive number, got {v!r}")
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}")
        if self.potential not in ("full", "harmonic"):
            raise ValueError("potential must be 'full' or 'harmonic'")
        if self.n < 0 or self.nz < 0 or self.nr < 0:
            raise ValueError("levels and grid sizes must be non-negative")
        if self.dt_s is not None and not self.dt_s > 0:
            raise ValueError("dt_s must be positive")

    def task(self) -> ExpansionTask:
        return ExpansionTask(2.0 * math.pi * self.f0z_hz, 2.0 * math.pi * self.ffz_hz, self.tf_s,
                             AtomSpecies(self.mass_kg), BeamGeometry(self.waist_m, self.wavelength_m))

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def as_dotted(self) -> dict:
        values = asdict(self)
        return {key: values[name] for key, name in KEYS.items()}


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(name, text):
    kind = _TYPES[name]
    if name == "dt_s":
        return None if str(text).strip().lower() in ("", "none") else float(text)
    if kind in (float, "float"):
        return float(text)
    if kind in (int, "int"):
        return int(text)
    if kind in (bool, "bool"):
        return _parse_bool(text)
    return str(text).strip()


def parse_assignments(lines: Iterable[str]) -> dict:
    """``key = value`` lines (``#`` comments, blank lines ignored) to field values."""
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        out[KEYS[key]] = _convert(KEYS[key], value)
    return out


def load_config(path=None, overrides: Iterable[str] = (), base: RunConfig = None) -> RunConfig:
    """File values first, then ``key=value`` overrides."""
    values = {}
    if path is not None:
        with open(path) as fh:
            values.update(parse_assignments(fh))
    values.update(parse_assignments(overrides))
    return replace(base or RunConfig(), **values)


def dump_config(cfg: RunConfig) -> str:
    return "".join(f"{k} = {'none' if v is None else v}\n" for k, v in cfg.as_dotted().items())
