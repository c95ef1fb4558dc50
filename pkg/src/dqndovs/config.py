"""Configuration management for dqndovs.

One document covers every component. JSON and TOML are both accepted; the
section names match the attributes of ``Config``::

    [limits]     v_max, w_max, a_v_max, a_w_max, dt
    [dovs]       horizon, fine_dt, d_norm
    [sim]        arena_size, robot_radius, obstacle radii and speeds, max_steps
    [sensor]     noise sigmas, occlusion_enabled
    [reward]     r_goal, r_collision, r_dist, thresholds, safe distance
    [agent]      learner hyperparameters
    [network]    layer widths
    [curriculum] stages, epsilon schedule, scale
    [bench]      evaluation protocol
"""

import hashlib
import json
import math
import tomllib
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any

from dqndovs.core.curriculum import CurriculumConfig
from dqndovs.core.dovs import DEFAULT_D_NORM, DEFAULT_FINE_DT, DEFAULT_HORIZON
from dqndovs.core.episode import EnvParams
from dqndovs.core.errors import ConfigError
from dqndovs.core.models import (
    BenchmarkConfig,
    CurriculumStage,
    EpsilonMode,
    Hyperparams,
    KinodynamicLimits,
    ObstacleMix,
    RewardParams,
    SensorConfig,
)
from dqndovs.core.network import ArchitectureConfig
from dqndovs.core.simulator import SimParams


@dataclass(frozen=True)
class DovsSettings:
    """Collision look-ahead and normalization settings."""

    horizon: float = DEFAULT_HORIZON
    fine_dt: float = DEFAULT_FINE_DT
    d_norm: float = DEFAULT_D_NORM

    def __post_init__(self):
        if self.horizon <= 0 or self.fine_dt <= 0 or self.fine_dt > self.horizon:
            raise ConfigError("need 0 < fine_dt <= horizon")


@dataclass
class Config:
    """Configuration for a dqndovs run."""

    limits: KinodynamicLimits = field(default_factory=KinodynamicLimits)
    dovs: DovsSettings = field(default_factory=DovsSettings)
    sim: SimParams = field(default_factory=SimParams)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    reward: RewardParams = field(default_factory=RewardParams)
    agent: Hyperparams = field(default_factory=Hyperparams)
    network: ArchitectureConfig = field(default_factory=ArchitectureConfig)
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    bench: BenchmarkConfig = field(default_factory=BenchmarkConfig)

    @classmethod
    def load(cls, path: Path | str | None) -> "Config":
        """Load configuration from a JSON or TOML file.

        Args:
            path: Config file; None gives the defaults

        Returns:
            Config instance

        Raises:
            ConfigError: If the file cannot be parsed or has unknown keys
        """
        if path is None:
            return cls()
        path = Path(path)
        try:
            if path.suffix == ".toml":
                with open(path, "rb") as f:
                    data = tomllib.load(f)
            else:
                with open(path) as f:
                    data = json.load(f)
        except (OSError, tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
            raise ConfigError(f"{path}: {e}") from e
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        if not isinstance(data, dict):
            raise ConfigError("config document must be a mapping")
        return _build(cls, data, "")

    def to_dict(self) -> dict:
        """JSON-ready dictionary; infinite goal distances become null."""
        return _plain(asdict(self))

    def save(self, path: Path | str) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def digest(self) -> str:
        """sha256 of the canonical JSON form."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def env_params(self) -> EnvParams:
        return EnvParams(
            limits=self.limits,
            sim=self.sim,
            sensor=self.sensor,
            rewards=self.reward,
            horizon=self.dovs.horizon,
            fine_dt=self.dovs.fine_dt,
            d_norm=self.dovs.d_norm,
        )


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float) and math.isinf(value):
        return None
    return value


def _build(cls: type, data: dict, where: str) -> Any:
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where or 'config'}: {', '.join(sorted(unknown))}")
    kwargs = {}
    for name, value in data.items():
        default = known[name].default_factory() if callable(known[name].default_factory) else None
        key = f"{where}.{name}" if where else name
        if is_dataclass(default) and isinstance(value, dict):
            kwargs[name] = _build(type(default), value, key)
        elif name == "stages":
            kwargs[name] = [_stage(s, f"{key}[{i}]") for i, s in enumerate(value)]
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid {where or 'config'}: {e}") from e


def _stage(data: dict, where: str) -> CurriculumStage:
    data = dict(data)
    try:
        data["epsilon_mode"] = EpsilonMode(data["epsilon_mode"])
        data["obstacle_mix"] = ObstacleMix(data["obstacle_mix"])
    except (KeyError, ValueError) as e:
        raise ConfigError(f"{where}: bad or missing epsilon_mode/obstacle_mix") from e
    if data.get("goal_distance_max", 0.0) is None:
        data["goal_distance_max"] = math.inf
    return _build(CurriculumStage, data, where)
