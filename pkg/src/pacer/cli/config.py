"""Run configuration files: flat JSON objects with dotted keys."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

from ..envs import ENVIRONMENTS
from ..errors import ConfigurationError
from ..trainer.config import TrainConfig, config_fields

# dotted file key -> TrainConfig attribute
GROUPED = {
    "utility.kind": "utility",
    "utility.cvar_level": "cvar_level",
    "mmd.n_samples": "n_mmd",
    "mmd.bandwidth_sq": "mmd_bandwidth_sq",
    "mmd.batch": "mmd_batch",
    "ablation.policy_kind": "policy_kind",
    "ablation.regularizer": "regularizer",
    "ablation.epsilon": "epsilon",
}
ATTR_TO_KEY = {v: k for k, v in GROUPED.items()}
RUN_KEYS = ("env", "seeds", "out_dir")
DEFAULT_OUT = "runs"


def train_keys() -> list:
    return [ATTR_TO_KEY.get(name, name) for name in config_fields() if name != "seed"]


def _field_types() -> dict:
    hints = typing.get_type_hints(TrainConfig)
    return {ATTR_TO_KEY.get(n, n): hints[n] for n in config_fields() if n != "seed"}


def _coerce(key, value, tp):
    """Convert a JSON value to the annotated field type, or fail naming ``key``."""
    args = typing.get_args(tp)
    optional = typing.get_origin(tp) in (typing.Union, types.UnionType) and type(None) in args
    if optional:
        if value is None:
            return None
        tp = next(a for a in args if a is not type(None))
    try:
        if tp is bool:
            if isinstance(value, bool):
                return value
            if isinstance(value, str) and value.lower() in ("true", "false", "1", "0"):
                return value.lower() in ("true", "1")
            raise TypeError
        if tp is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if tp is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if tp is tuple:
            if not isinstance(value, (list, tuple)):
                raise TypeError
            return [int(v) for v in value]
        if tp is str:
            if not isinstance(value, str):
                raise TypeError
            return value
    except (TypeError, ValueError):
        pass
    else:
        return value
    raise ConfigurationError(f"bad value for {key}: {value!r}", key)


@dataclass
class RunConfig:
    """Everything needed to launch one or more seeds of one experiment.

    ``train`` holds file-style (dotted) keys mapped to values; keys left
    out take the :class:`TrainConfig` defaults.
    """

    env: str
    seeds: list = field(default_factory=lambda: [0])
    out_dir: str = DEFAULT_OUT
    train: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.env not in ENVIRONMENTS:
            raise ConfigurationError(f"env must be one of {sorted(ENVIRONMENTS)}, got {self.env!r}", "env")
        if isinstance(self.seeds, int) or not self.seeds:
            raise ConfigurationError("seeds must be a nonempty list of integers", "seeds")
        seeds = []
        for s in self.seeds:
            if isinstance(s, bool) or not isinstance(s, int):
                raise ConfigurationError(f"seeds must be integers, got {s!r}", "seeds")
            seeds.append(s)
        if len(set(seeds)) != len(seeds):
            raise ConfigurationError("seeds must be distinct", "seeds")
        self.seeds = seeds
        types_ = _field_types()
        clean = {}
        for key, value in self.train.items():
            if key not in types_:
                raise ConfigurationError(f"unknown config key {key!r}", key)
            clean[key] = _coerce(key, value, types_[key])
        self.train = clean
        self.train_config(self.seeds[0])

    def train_config(self, seed: int) -> TrainConfig:
        kwargs = {GROUPED.get(k, k): (tuple(v) if isinstance(v, list) else v) for k, v in self.train.items()}
        try:
            return TrainConfig(seed=seed, **kwargs)
        except ConfigurationError as exc:
            raise ConfigurationError(str(exc), ATTR_TO_KEY.get(exc.key, exc.key)) from None

    def to_dict(self) -> dict:
        d = {"env": self.env, "seeds": list(self.seeds), "out_dir": self.out_dir}
        d.update(self.train)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigurationError("config must be a JSON object", "<root>")
        if "env" not in data:
            raise ConfigurationError("missing required key 'env'", "env")
        data = dict(data)
        if "seed" in data:
            if "seeds" in data:
                raise ConfigurationError("give either seed or seeds, not both", "seed")
            data["seeds"] = [data.pop("seed")]
        run = {k: data.pop(k) for k in RUN_KEYS if k in data}
        return cls(train=data, **run)

    def with_overrides(self, overrides) -> "RunConfig":
        d = self.to_dict()
        for item in overrides or ():
            key, value = parse_override(item)
            if key == "seed":
                d["seeds"] = [value]
                continue
            d[key] = value
        return RunConfig.from_dict(d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps())
        return path

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}", "config_path") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {path} is not valid JSON: {exc}", "config_path") from exc
        return cls.from_dict(data)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def resolved_out_dir(self) -> Path:
        return Path(os.environ.get("PACER_OUT") or self.out_dir)

    def for_seed(self, seed: int) -> "RunConfig":
        return dataclasses.replace(self, seeds=[seed])


def parse_override(item: str):
    """``key=value`` with the value read as JSON when possible, else as a string."""
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigurationError(f"override {item!r} is not of the form key=value", key or item)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value
