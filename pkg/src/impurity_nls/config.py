"""Flat, typed run configurations layered over ``defaults.yaml``."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from . import __version__
from .errors import ConfigError

COMMANDS = ("simulate-hartree", "simulate-delta", "simulate-manybody", "study-eps", "study-chaos")


@lru_cache(maxsize=None)
def _defaults_text() -> str:
    return resources.files("impurity_nls").joinpath("defaults.yaml").read_text()


def defaults(command: str) -> dict[str, Any]:
    table = yaml.safe_load(_defaults_text())
    if command not in table:
        raise ConfigError(f"no defaults for command {command!r}")
    return dict(table[command])


def _coerce(key: str, value: Any, template: Any) -> Any:
    if isinstance(template, bool):
        if isinstance(value, bool):
            return value
    elif isinstance(template, int):
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif isinstance(template, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if isinstance(value, str):
            # YAML 1.1 reads "1e-3" as a string
            try:
                return float(value)
            except ValueError:
                pass
    elif isinstance(template, str):
        if isinstance(value, str):
            return value
    elif isinstance(template, list):
        if isinstance(value, list) and value:
            return [_coerce(f"{key}[{i}]", v, template[0]) for i, v in enumerate(value)]
        if isinstance(value, list):
            raise ConfigError(f"{key}: list must not be empty")
    raise ConfigError(
        f"{key}: expected {type(template).__name__}, got {value!r} ({type(value).__name__})"
    )


def resolve(command: str, overrides: dict[str, Any] | None) -> dict[str, Any]:
    """Defaults for ``command`` with ``overrides`` applied and type-checked."""
    base = defaults(command)
    overrides = overrides or {}
    if not isinstance(overrides, dict):
        raise ConfigError("config must be a flat mapping of keys to values")
    unknown = sorted(set(overrides) - set(base))
    if unknown:
        raise ConfigError(
            f"unknown key(s) for {command}: {', '.join(unknown)}; allowed: {', '.join(sorted(base))}"
        )
    for key, value in overrides.items():
        base[key] = _coerce(key, value, base[key])
    return base


def load(command: str, path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return resolve(command, {})
    try:
        data = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return resolve(command, data)


def dump(command: str, cfg: dict[str, Any]) -> str:
    """Resolved config as YAML; loadable by :func:`load` for an exact rerun."""
    header = f"# impurity_nls {__version__} -- resolved config for `{command}`\n"
    return header + yaml.safe_dump(cfg, sort_keys=True, default_flow_style=False)
