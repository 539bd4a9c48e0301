"""Run configuration files (TOML).

A run file has a top-level ``seed`` and the sections ``[model]``, ``[train]``,
``[loss]`` and ``[data]``. Every key is optional; missing keys take the
library defaults. Unknown sections or keys are rejected.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import ModelConfig
from .training import LossConfig, TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DataConfig:
    manifest: str = "corpus/manifest.csv"
    out_dir: str = "run"


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    data: DataConfig = field(default_factory=DataConfig)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed, train=replace(self.train, seed=seed))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "loss": {f.name: getattr(self.loss, f.name) for f in fields(LossConfig)},
            "data": {f.name: getattr(self.data, f.name) for f in fields(DataConfig)},
        }


_SECTIONS = {"model": ModelConfig, "train": TrainConfig, "loss": LossConfig, "data": DataConfig}


def _section(cls, name: str, values) -> object:
    if not isinstance(values, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{name}] section: {exc}") from exc


def parse_config(doc: dict) -> RunConfig:
    unknown = sorted(set(doc) - set(_SECTIONS) - {"seed"})
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
    parts = {name: _section(cls, name, doc.get(name, {})) for name, cls in _SECTIONS.items()}
    train = parts["train"]
    if "seed" not in doc.get("train", {}):
        train = replace(train, seed=seed)
    return RunConfig(seed=seed, model=parts["model"], train=train, loss=parts["loss"], data=parts["data"])


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(doc)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialise {type(v).__name__} to TOML")


def dump_config(cfg: RunConfig) -> str:
    d = cfg.to_dict()
    lines = [f"seed = {_toml_value(d.pop('seed'))}"]
    for section in ("model", "train", "loss", "data"):
        lines.append("")
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {_toml_value(v)}" for k, v in d[section].items())
    return "\n".join(lines) + "\n"


def write_resolved_config(cfg: RunConfig, out_dir: str | Path) -> Path:
    path = Path(out_dir) / "resolved_config.toml"
    path.write_text(dump_config(cfg), encoding="utf-8")
    return path
