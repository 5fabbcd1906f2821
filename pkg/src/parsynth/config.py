"""Pipeline configuration file (JSON), validated on load.

Unknown keys are rejected with their path so typos surface immediately.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .degrade import DegradeParams
from .scoring import CriteriaThresholds


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EndpointConfig:
    diffusion: str = "mock://diffusion"
    detector: str = "mock://detector"


@dataclass(frozen=True)
class PipelineConfig:
    manifest: str = ""
    thresholds: CriteriaThresholds = field(default_factory=CriteriaThresholds)
    degrade: DegradeParams = field(default_factory=DegradeParams)
    endpoints: EndpointConfig = field(default_factory=EndpointConfig)
    weight_augmented: float = 0.5
    parallelism: int = 1
    initial_seed: int = 123456789

    def __post_init__(self):
        if not 0.0 <= self.weight_augmented <= 1.0:
            raise ConfigError("weight_augmented must be in [0, 1]")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")


def _build(cls, data: dict, path: str):
    allowed = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key '{path}{sorted(unknown)[0]}'")
    kwargs = {}
    for name, value in data.items():
        if name == "thresholds":
            kwargs[name] = _build(CriteriaThresholds, value, f"{path}{name}.")
        elif name == "degrade":
            if "noise_size" in value:
                value = dict(value, noise_size=tuple(value["noise_size"]))
            kwargs[name] = _build(DegradeParams, value, f"{path}{name}.")
        elif name == "endpoints":
            kwargs[name] = _build(EndpointConfig, value, f"{path}{name}.")
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config near {path or 'top level'}: {exc}") from exc


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return _build(PipelineConfig, data, "")
