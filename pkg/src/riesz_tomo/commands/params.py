"""Typed access to the string parameters of a RunConfig."""

from __future__ import annotations

from pathlib import Path
from typing import Any

from ..exceptions import ParameterError
from ..fileio import export_csv, write_grid
from ..grid import GridField
from ..schemas import RunConfig

# Overrides accepted by grid.preset_phantom.
PRESET_KEYS = ("radius", "r_inner", "r_outer", "smooth", "cx", "cy", "k", "value", "offset")

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


def param_int(cfg: RunConfig, key: str, default: int | None = None) -> int:
    raw = cfg.params.get(key)
    if raw is None:
        if default is None:
            raise ParameterError(f"parameter {key!r} is required")
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ParameterError(f"parameter {key!r} must be an integer, got {raw!r}") from e


def param_float(cfg: RunConfig, key: str, default: float | None = None) -> float:
    raw = cfg.params.get(key)
    if raw is None:
        if default is None:
            raise ParameterError(f"parameter {key!r} is required")
        return default
    try:
        return float(raw)
    except ValueError as e:
        raise ParameterError(f"parameter {key!r} must be a number, got {raw!r}") from e


def param_bool(cfg: RunConfig, key: str, default: bool) -> bool:
    raw = cfg.params.get(key)
    if raw is None:
        return default
    if raw.lower() in _TRUE:
        return True
    if raw.lower() in _FALSE:
        return False
    raise ParameterError(f"parameter {key!r} must be true or false, got {raw!r}")


def param_str(cfg: RunConfig, key: str, default: str | None = None) -> str:
    raw = cfg.params.get(key, default)
    if raw is None:
        raise ParameterError(f"parameter {key!r} is required")
    return raw


def optional_int(cfg: RunConfig, key: str) -> int | None:
    return param_int(cfg, key) if key in cfg.params else None


def require_input(cfg: RunConfig, index: int = 0) -> Path:
    if len(cfg.inputs) <= index:
        raise ParameterError(f"{cfg.command} needs input file #{index + 1}")
    return cfg.inputs[index]


def require_out(cfg: RunConfig) -> Path:
    if cfg.out is None:
        raise ParameterError(f"{cfg.command} needs --out")
    return cfg.out


def save_field(cfg: RunConfig, field: GridField) -> dict[str, Any]:
    """Write the output field (and its CSV export if requested)."""
    path = require_out(cfg)
    write_grid(path, field)
    saved = {"path": str(path)}
    if cfg.csv is not None:
        export_csv(cfg.csv, field)
        saved["csv"] = str(cfg.csv)
    return saved
