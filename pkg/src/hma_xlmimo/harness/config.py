"""Experiment configuration: YAML loading, validation and the config hash."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from ..frontend import FeasibleSet
from ..optimizer.solvers import SolverOptions

AXES = ("bandwidth", "array_length", "distance", "users", "power", "coupling")
BASELINES = ("narrowband", "plane_wave", "plane_narrowband", "fully_digital", "fully_digital_ula",
             "fully_digital_hma", "hybrid")
CHANNEL_MODELS = ("spherical", "plane")
WAVEGUIDE_MODES = ("scalar", "full")
# fields that never change numbers in the outputs
_NOT_HASHED = ("out", "threads")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ExperimentConfig:
    """One scenario or one sweep at desk scale.

    Lengths are in carrier wavelengths, frequencies in MHz/GHz and powers in
    dBm so that the YAML stays readable. ``values`` are the sweep axis points:
    MHz for bandwidth, wavelengths for array_length, fractions of the
    Fraunhofer distance for distance, user counts, dBm for power and the
    conventional-array spacing in wavelengths for coupling.
    """

    kind: str = "single"
    axis: str | None = None
    values: tuple = ()
    array_length: float = 2.0
    bandwidth_mhz: float = 600.0
    subcarriers: int = 4
    carrier_ghz: float = 26.0
    users: int = 2
    paths: int = 5
    power_dbm: float = -60.0
    noise_dbm_hz: float = -174.0
    user_angle_deg: float | None = None
    sets: tuple = ("UC", "AO", "BA", "LP")
    baselines: tuple = ()
    channel_model: str = "spherical"
    coupling: bool = False
    waveguide: str = "scalar"
    conventional_spacing: float = 0.25
    seeds: tuple = tuple(range(10))
    ao_tol: float = 1e-3
    ao_max_iter: int = 100
    mm_tol: float = 1e-8
    mm_max_iter: int = 1000
    qp_tol: float = 1e-9
    qp_max_iter: int = 500
    traces: bool = True
    out: str = "results"
    threads: int = 1

    def __post_init__(self):
        # 2 and 2.0 must hash alike
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.type in ("float", "float | None") and isinstance(value, (int, float)) and not isinstance(value, bool):
                object.__setattr__(self, f.name, float(value))
        if self.axis != "users":
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        try:
            object.__setattr__(self, "seeds", tuple(int(v) for v in self.seeds))
        except (TypeError, ValueError):
            raise ConfigError("seeds", "seeds must be integers") from None
        self._validate()

    def _validate(self):
        if self.kind not in ("single", "sweep"):
            raise ConfigError("kind", f"must be 'single' or 'sweep', got {self.kind!r}")
        if self.kind == "sweep":
            if self.axis not in AXES:
                raise ConfigError("axis", f"must be one of {', '.join(AXES)}, got {self.axis!r}")
            if not self.values:
                raise ConfigError("values", "a sweep needs at least one axis value")
            if list(self.values) != sorted(self.values):
                raise ConfigError("values", "axis values must be sorted ascending")
        if not self.seeds:
            raise ConfigError("seeds", "at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds", "seeds must be distinct")
        for name in ("array_length", "bandwidth_mhz", "carrier_ghz", "conventional_spacing"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be positive")
        for name in ("subcarriers", "users", "threads", "ao_max_iter", "mm_max_iter", "qp_max_iter"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(name, "must be a positive integer")
        if not isinstance(self.paths, int) or self.paths < 0:
            raise ConfigError("paths", "must be a non-negative integer")
        for name in ("ao_tol", "mm_tol", "qp_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be positive")
        for s in self.sets:
            try:
                FeasibleSet.parse(s)
            except (KeyError, ValueError):
                raise ConfigError("sets", f"unknown feasible set {s!r}") from None
        for b in self.baselines:
            if b not in BASELINES:
                raise ConfigError("baselines", f"unknown baseline {b!r}; choose from {', '.join(BASELINES)}")
        if not self.sets and not self.baselines:
            raise ConfigError("sets", "nothing to run: no sets and no baselines")
        if self.channel_model not in CHANNEL_MODELS:
            raise ConfigError("channel_model", f"must be one of {CHANNEL_MODELS}")
        if self.waveguide not in WAVEGUIDE_MODES:
            raise ConfigError("waveguide", f"must be one of {WAVEGUIDE_MODES}")

    @property
    def solver_options(self) -> SolverOptions:
        return SolverOptions(ao_tol=self.ao_tol, ao_max_iter=self.ao_max_iter, mm_tol=self.mm_tol,
                             mm_max_iter=self.mm_max_iter, qp_tol=self.qp_tol, qp_max_iter=self.qp_max_iter)

    def axis_points(self) -> tuple:
        return tuple(self.values) if self.kind == "sweep" else (None,)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key, value in d.items():
            if isinstance(value, tuple):
                d[key] = list(value)
        return d

    @property
    def hash(self) -> str:
        """sha256 over every field that can change a result."""
        d = {k: v for k, v in self.to_dict().items() if k not in _NOT_HASHED}
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _tuple_fields() -> set[str]:
    return {f.name for f in dataclasses.fields(ExperimentConfig) if isinstance(f.default, tuple)}


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a mapping")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")
    data = dict(data)
    if isinstance(data.get("seeds"), (str, int)):
        data["seeds"] = parse_seeds(str(data["seeds"]))
    for key in _tuple_fields() & set(data):
        value = data[key]
        if isinstance(value, str):
            value = [v for v in (x.strip() for x in value.split(",")) if v]
        if not isinstance(value, (list, tuple)):
            raise ConfigError(key, "must be a list")
        data[key] = tuple(value)
    if "sets" in data:
        data["sets"] = tuple(str(s).upper() for s in data["sets"])
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError("<root>", str(exc)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"{path} is not valid YAML: {exc}") from None
    return config_from_dict(data)


def parse_seeds(text: str) -> tuple[int, ...]:
    """'0,3,7' or '0-9' (inclusive) or a mix of both."""
    seeds: list[int] = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            seeds.extend(range(int(lo), int(hi) + 1) if sep else [int(part)])
        except ValueError:
            raise ConfigError("seeds", f"cannot parse {part!r}") from None
    if not seeds:
        raise ConfigError("seeds", "empty seed list")
    return tuple(seeds)
