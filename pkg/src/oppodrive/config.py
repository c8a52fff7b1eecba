"""Environment and run configuration.

The run configuration file is a UTF-8 ``key = value`` text file split into
``[env]``, ``[reward]``, ``[ppo]`` and ``[backends]`` sections.  Environment
keys mirror the simulator parameter names (lane_count, vehicles_density,
duration, ego_spacing, target_speeds, ...).  Unknown keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError


@dataclass(frozen=True)
class EnvConfig:
    lane_count: int = 4
    vehicles_density: float = 2.0
    duration: int = 60                 # policy steps; evaluation uses 30
    ego_spacing: float = 4.0
    observed_vehicles: int = 33        # rows of the kinematics array
    target_speeds: tuple[float, ...] = (20.0, 25.0, 30.0, 35.0, 40.0)
    policy_frequency: float = 1.0      # Hz
    sim_frequency: float = 15.0        # Hz
    lane_width: float = 4.0            # m
    vehicle_length: float = 5.0        # m
    vehicle_width: float = 2.0         # m
    spawn_count: int = 30
    seed: int = 0

    def __post_init__(self) -> None:
        validate_env_config(self)

    @property
    def substeps(self) -> int:
        return int(round(self.sim_frequency / self.policy_frequency))

    @property
    def dt(self) -> float:
        return 1.0 / self.sim_frequency

    def lane_center(self, lane_index: int) -> float:
        return lane_index * self.lane_width

    def replace(self, **kwargs) -> "EnvConfig":
        return dataclasses.replace(self, **kwargs)


def validate_env_config(cfg: EnvConfig) -> None:
    if cfg.lane_count < 2:
        raise ConfigurationError(f"lane_count must be >= 2, got {cfg.lane_count}")
    if cfg.vehicles_density <= 0:
        raise ConfigurationError(f"vehicles_density must be > 0, got {cfg.vehicles_density}")
    if cfg.duration < 1:
        raise ConfigurationError(f"duration must be >= 1, got {cfg.duration}")
    if cfg.observed_vehicles < 1:
        raise ConfigurationError(f"observed_vehicles must be >= 1, got {cfg.observed_vehicles}")
    if cfg.spawn_count < 0:
        raise ConfigurationError(f"spawn_count must be >= 0, got {cfg.spawn_count}")
    if len(cfg.target_speeds) < 1:
        raise ConfigurationError("target_speeds must be non-empty")
    if any(b <= a for a, b in zip(cfg.target_speeds, cfg.target_speeds[1:])):
        raise ConfigurationError(f"target_speeds must be strictly increasing, got {cfg.target_speeds}")
    if cfg.policy_frequency <= 0 or cfg.sim_frequency <= 0:
        raise ConfigurationError("frequencies must be positive")
    ratio = cfg.sim_frequency / cfg.policy_frequency
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ConfigurationError(
            f"sim_frequency ({cfg.sim_frequency}) must be an integer multiple of "
            f"policy_frequency ({cfg.policy_frequency})"
        )
    if cfg.lane_width <= 0 or cfg.vehicle_length <= 0 or cfg.vehicle_width <= 0:
        raise ConfigurationError("geometry parameters must be positive")


_ENV_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(EnvConfig)}


def _parse_env_value(key: str, raw: str):
    raw = raw.strip()
    if key == "target_speeds":
        items = raw.strip("[]()").replace(",", " ").split()
        if not items:
            raise ConfigurationError("target_speeds must not be empty")
        return tuple(float(v) for v in items)
    kind = _ENV_FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigurationError(f"invalid value for {key!r}: {raw!r}") from exc


def env_config_from_mapping(mapping: dict) -> EnvConfig:
    """Build an EnvConfig from string key/value pairs; unknown keys are an error."""
    kwargs = {}
    for key, raw in mapping.items():
        if key not in _ENV_FIELD_TYPES:
            raise ConfigurationError(f"unknown environment parameter {key!r}")
        kwargs[key] = _parse_env_value(key, str(raw))
    return EnvConfig(**kwargs)


def load_env_config(path: str | Path) -> EnvConfig:
    """Read a plain ``key = value`` environment file (no sections required)."""
    text = Path(path).read_text(encoding="utf-8")
    mapping = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith(("#", ";")) or line.startswith("["):
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        mapping[key.strip()] = value.strip()
    return env_config_from_mapping(mapping)


@dataclass
class RunConfig:
    """Parsed multi-section run configuration."""

    env: EnvConfig
    reward: dict = field(default_factory=dict)
    ppo: dict = field(default_factory=dict)
    backends: dict = field(default_factory=dict)


def load_run_config(path: str | Path) -> RunConfig:
    parser = configparser.ConfigParser()
    try:
        read = parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    if not read:
        raise ConfigurationError(f"config file not found: {path}")
    known = {"env", "reward", "ppo", "backends"}
    extra = set(parser.sections()) - known
    if extra:
        raise ConfigurationError(f"unknown config sections: {sorted(extra)}")
    env = env_config_from_mapping(dict(parser["env"]) if parser.has_section("env") else {})
    return RunConfig(
        env=env,
        reward=dict(parser["reward"]) if parser.has_section("reward") else {},
        ppo=dict(parser["ppo"]) if parser.has_section("ppo") else {},
        backends=dict(parser["backends"]) if parser.has_section("backends") else {},
    )
