"""Scenario configuration for multi-cell DAA massive MIMO simulations."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

FORMAT_VERSION = 1

FADING_MODES = ("correlated", "uncorrelated")
ESTIMATORS = ("mmse", "ewmmse")
ALLOCATORS = ("maxmin", "equalnu")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkConfig:
    L: int = 2
    K: int = 10
    N: int = 4
    M: int = 100
    cell_radius: float = 1000.0
    subarray_offset: float = 120.0
    min_user_distance: float = 35.0
    path_loss_exponent: float = 3.76
    # pilot_snr and noise_power are relative to a unit-gain link at 1 m; the
    # values put max-min throughput of the {100,4} layout near 12 Mbit/s
    pilot_snr: float = 1.4e10
    noise_power: float = 7.1e-11
    bandwidth: float = 20.0e6
    dl_fraction: float = 0.45
    angular_spread_std: float = 5.0  # degrees
    # "uniform_std": half-width = sqrt(3) * std; "half_width": half-width = std
    angular_spread_convention: str = "uniform_std"
    antenna_spacing: float = 0.5  # wavelengths
    quadrature_order: int = 64
    shadowing_std_db: float = 0.0
    fading_mode: str = "uncorrelated"
    estimator: str = "mmse"
    power_constraint: str = "per_cell"  # or "per_array"
    epsilon: float = 1e-3
    rng_seed: int = 0

    def __post_init__(self):
        self.validate()

    @property
    def M_tot(self) -> int:
        return self.M * self.N

    def validate(self):
        for name in ("L", "K", "N", "M", "quadrature_order"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0 < self.dl_fraction <= 1:
            raise ConfigError("dl_fraction must lie in (0, 1]")
        if self.path_loss_exponent <= 2:
            raise ConfigError("path_loss_exponent must exceed 2")
        if self.noise_power <= 0 or self.pilot_snr <= 0:
            raise ConfigError("noise_power and pilot_snr must be positive")
        if not 0 < self.subarray_offset < self.cell_radius:
            raise ConfigError("subarray_offset must lie in (0, cell_radius)")
        if self.min_user_distance <= 0:
            raise ConfigError("min_user_distance must be positive")
        if self.bandwidth <= 0 or self.epsilon <= 0:
            raise ConfigError("bandwidth and epsilon must be positive")
        if self.angular_spread_std <= 0 or self.antenna_spacing <= 0:
            raise ConfigError("angular spread and antenna spacing must be positive")
        if self.fading_mode not in FADING_MODES:
            raise ConfigError(f"fading_mode must be one of {FADING_MODES}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator must be one of {ESTIMATORS}")
        if self.angular_spread_convention not in ("uniform_std", "half_width"):
            raise ConfigError("unknown angular_spread_convention")
        if self.power_constraint not in ("per_cell", "per_array"):
            raise ConfigError("power_constraint must be per_cell or per_array")

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        return cls(**_coerce(cls, d))


@dataclass(frozen=True)
class ExperimentSpec:
    base: NetworkConfig = field(default_factory=NetworkConfig)
    daa_configs: tuple = ((100, 4), (10, 40))
    n_drops: int = 100
    allocators: tuple = ALLOCATORS
    fading_modes: tuple = ("uncorrelated",)
    estimators: tuple = ("mmse",)
    output_path: str = "results.json"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "daa_configs", tuple(tuple(int(v) for v in mn) for mn in self.daa_configs))
        for name in ("allocators", "fading_modes", "estimators"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self.validate()

    @property
    def M_tot(self) -> int:
        return self.base.M_tot

    def validate(self):
        if self.n_drops < 1:
            raise ConfigError("n_drops must be >= 1")
        for mn in self.daa_configs:
            if len(mn) != 2:
                raise ConfigError(f"DAA config {mn} is not an {{M,N}} pair")
            M, N = mn
            if M < 1 or N < 1 or M * N != self.M_tot:
                raise ConfigError(f"DAA config {{{M},{N}}} does not satisfy M*N = M_tot = {self.M_tot}")
        for a in self.allocators:
            if a not in ALLOCATORS:
                raise ConfigError(f"unknown allocator {a!r}")
        for f in self.fading_modes:
            if f not in FADING_MODES:
                raise ConfigError(f"unknown fading mode {f!r}")
        for e in self.estimators:
            if e not in ESTIMATORS:
                raise ConfigError(f"unknown estimator {e!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["base"] = self.base.to_dict()
        d["daa_configs"] = [list(mn) for mn in self.daa_configs]
        for name in ("allocators", "fading_modes", "estimators"):
            d[name] = list(d[name])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        base = NetworkConfig.from_dict(d.pop("network", d.pop("base", {})) or {})
        exp = d.pop("experiment", {}) or {}
        exp.update(d)
        exp.pop("format_version", None)
        kw = _coerce(cls, exp)
        return cls(base=base, **kw)


def _coerce(cls, d: dict) -> dict:
    """Cast raw (YAML) values to the declared field types; reject unknown keys."""
    known = {f.name: f for f in dataclasses.fields(cls)}
    out = {}
    for key, value in d.items():
        if key not in known:
            raise ConfigError(f"unknown {cls.__name__} field {key!r}")
        default = known[key].default
        if isinstance(default, bool):
            value = bool(value)
        elif isinstance(default, int):
            value = int(value)
        elif isinstance(default, float):
            value = float(value)  # yaml 1.1 reads "1e-12" as a string
        out[key] = value
    return out


def load_spec(path) -> ExperimentSpec:
    """Read an experiment file with `network:` and `experiment:` sections."""
    text = Path(path).read_text()
    raw = yaml.safe_load(text) or {}
    if not isinstance(raw, dict):
        raise ConfigError("config file must be a mapping")
    version = raw.get("format_version", FORMAT_VERSION)
    if int(version) != FORMAT_VERSION:
        raise ConfigError(f"unsupported format_version {version}")
    return ExperimentSpec.from_dict(raw)


def dump_spec(spec: ExperimentSpec) -> str:
    d = spec.to_dict()
    out = {"format_version": FORMAT_VERSION, "network": d.pop("base"), "experiment": d}
    return yaml.safe_dump(out, sort_keys=False)
