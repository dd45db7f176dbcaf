"""Flat dotted-key config files (YAML) and experiment presets.

An empty file gives the built-in defaults::

    env.depth: 200        # meters
    env.e_th: 0.3
    train.gamma: 0.99
    eval.runs: 100
"""
from __future__ import annotations

from dataclasses import fields, replace
from pathlib import Path

import yaml

from .env import EnvConfig
from .rl.train import TrainConfig

SECTIONS = ("env", "train", "baseline", "eval", "sweep")
_UNIT_SUFFIXES = ("_m", "_s", "_rad")

PRESETS = {
    "paper-fig6": {"env.depth": 15.0, "env.e_th": 0.3, "env.max_steps": 200, "eval.runs": 100},
    "paper-fig4": {"sweep.depth": 200.0, "sweep.runs": 100,
                   "sweep.radii": [100.0, 150.0, 200.0, 250.0, 283.0, 300.0, 350.0, 400.0,
                                   450.0, 500.0]},
}


class ConfigError(ValueError):
    pass


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def load_config(path) -> dict:
    """Read a config file into a flat ``{"section.key": value}`` dict."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping of dotted keys")
    flat = _flatten(data)
    for key in flat:
        if key.split(".", 1)[0] not in SECTIONS or "." not in key:
            raise ConfigError(f"{path}: unknown key {key!r}")
    return flat


def section(flat: dict, name: str) -> dict:
    p = name + "."
    return {k[len(p):]: v for k, v in flat.items() if k.startswith(p)}


def _field_name(cls, key: str) -> str:
    names = {f.name for f in fields(cls)}
    if key in names:
        return key
    for suffix in _UNIT_SUFFIXES:
        if key.endswith(suffix) and key[: -len(suffix)] in names:
            return key[: -len(suffix)]
    raise ConfigError(f"unknown {cls.__name__} field {key!r}")


def _apply(obj, values: dict):
    updates = {_field_name(type(obj), k): v for k, v in values.items()}
    try:
        return replace(obj, **updates)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def env_config(flat: dict, base: EnvConfig | None = None) -> EnvConfig:
    return _apply(base or EnvConfig(), section(flat, "env"))


def train_config(flat: dict, base: TrainConfig | None = None) -> TrainConfig:
    return _apply(base or TrainConfig(), section(flat, "train"))


def preset(name: str) -> dict:
    try:
        return dict(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def parse_override(text: str) -> tuple[str, object]:
    """``key=value`` with the value parsed as YAML (numbers, lists, booleans)."""
    if "=" not in text:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), yaml.safe_load(value)
