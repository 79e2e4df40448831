"""Run configuration: ``key = value`` files with command-line overrides."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .training import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig(TrainConfig):
    data_root: str | None = None
    out_dir: str | None = None
    checkpoint: str | None = None

    def train_config(self) -> TrainConfig:
        names = {f.name for f in dataclasses.fields(TrainConfig)}
        return TrainConfig(**{k: v for k, v in dataclasses.asdict(self).items() if k in names})

    def checkpoint_path(self) -> Path:
        if self.checkpoint:
            return Path(self.checkpoint)
        if self.out_dir:
            return Path(self.out_dir) / "model.tsrn"
        raise ConfigError("missing required path: checkpoint (or out_dir)")

    def require(self, *keys: str) -> None:
        for key in keys:
            if not getattr(self, key):
                raise ConfigError(f"missing required path: {key}")


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_INT_KEYS = {"batch_size", "max_epochs", "early_stop_patience", "lr_patience", "seed"}
_FLOAT_KEYS = {"learning_rate", "lr_factor", "min_lr", "val_fraction", "test_fraction"}


def _convert(key: str, raw: str):
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    return raw


def parse_config(file_path=None, cli_overrides: dict | None = None) -> RunConfig:
    """Build a validated RunConfig; CLI overrides (non-None values) beat file values."""
    values: dict = {}
    if file_path is not None:
        path = Path(file_path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
            key, raw = (s.strip() for s in text.split("=", 1))
            if key not in _FIELDS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _convert(key, raw)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: cannot parse value {raw!r} for key {key!r}") from None
    for key, value in (cli_overrides or {}).items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        if value is not None:
            values[key] = value
    try:
        return RunConfig(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
