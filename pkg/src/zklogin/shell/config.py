"""Operator configuration, loaded from JSON; unknown keys are errors."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..jwtkit.registry import DEFAULT_WINDOW
from ..zkjwt import CircuitConfig, ConfigInvalid

BACKENDS = ("transparent", "simulation")


@dataclass(frozen=True)
class Config:
    circuit: CircuitConfig = field(default_factory=CircuitConfig)
    delta: int = 2
    window: int = DEFAULT_WINDOW
    backend: str = "transparent"
    state_dir: str = ".zklogin"
    salt_seed: str | None = None      # path; defaults to <state_dir>/salt.seed
    salt_port: int = 8701
    prover_port: int = 8702
    prover_queue: int = 4
    cache_size: int = 64
    issuers: tuple = ()               # if set, only these issuers' keys are trusted

    def validate(self) -> Config:
        self.circuit.validate()
        if self.backend not in BACKENDS:
            raise ConfigInvalid(f"backend must be one of {BACKENDS}")
        if self.delta < 1 or self.window < 0:
            raise ConfigInvalid("delta must be positive and window non-negative")
        if self.prover_queue < 1 or self.cache_size < 0:
            raise ConfigInvalid("prover_queue must be positive")
        for p in (self.salt_port, self.prover_port):
            if not 0 <= p < 65536:
                raise ConfigInvalid(f"bad port {p}")
        return self

    @property
    def state(self) -> Path:
        return Path(self.state_dir)

    @property
    def salt_seed_path(self) -> Path:
        return Path(self.salt_seed) if self.salt_seed else self.state / "salt.seed"


def _check_keys(data: dict, allowed, where: str) -> None:
    extra = set(data) - set(allowed)
    if extra:
        raise ConfigInvalid(f"unknown {where} keys: {', '.join(sorted(extra))}")


def from_dict(data: dict) -> Config:
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a JSON object")
    names = {f.name for f in dataclasses.fields(Config)}
    _check_keys(data, names, "config")
    data = dict(data)
    circ = data.pop("circuit", {})
    if not isinstance(circ, dict):
        raise ConfigInvalid("circuit must be an object")
    _check_keys(circ, {f.name for f in dataclasses.fields(CircuitConfig)}, "circuit")
    if "issuers" in data:
        data["issuers"] = tuple(data["issuers"])
    try:
        cfg = Config(circuit=CircuitConfig(**circ), **data)
    except TypeError as exc:
        raise ConfigInvalid(str(exc)) from exc
    return cfg.validate()


def load(path=None) -> Config:
    if path is None:
        return Config().validate()
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    return from_dict(data)
