"""Run configuration: one schema shared by every CLI mode.

Values merge from three layers with the precedence

    command-line flags  >  environment (CHIRALCHAIN_*)  >  config file

A configuration names a parameter grid (atom counts x directionality values x
uniform detunings x neighbour phases).  Point modes (simulate, validate)
require a single grid point; grid modes (sweep, fluctuate) iterate all of it.
In simulate/validate mode a detuning list whose length equals the atom count
is read as per-atom detunings instead of grid values.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

__all__ = ["RunConfig", "ConfigError", "parse_config", "load_config_file", "ENV_PREFIX", "MODES"]

ENV_PREFIX = "CHIRALCHAIN_"
MODES = ("simulate", "sweep", "fluctuate", "validate")
FORMATS = ("csv", "json")

#: drive strengths used by validate mode when none are given explicitly
DEFAULT_VALIDATE_RABI = (1e-3, 1e-2, 1e-1)


class ConfigError(Exception):
    """A configuration value is missing, malformed, or contradictory."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description (all layers merged, defaults applied)."""

    mode: str
    n_atoms: tuple[int, ...]
    xi_values: tuple[float, ...]
    delta_values: tuple[float, ...]
    directionality: tuple[float, ...]
    rabi_values: tuple[float, ...] = (0.01,)
    fluctuation: float = 0.0
    samples: int = 200
    seed: int = 0
    t_final: float = 50.0
    n_steps: int = 500
    workers: int = 1
    out: str | None = None
    format: str = "csv"

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        for name in ("n_atoms", "xi_values", "delta_values", "directionality", "rabi_values"):
            if len(getattr(self, name)) == 0:
                raise ConfigError(f"{name} must not be empty")
        if any(n < 1 for n in self.n_atoms):
            raise ConfigError(f"atom counts must be >= 1, got {self.n_atoms}")
        if any(not -1.0 <= d <= 1.0 for d in self.directionality):
            raise ConfigError(f"directionality must lie in [-1, 1], got {self.directionality}")
        if any(x < 0 for x in self.xi_values):
            raise ConfigError("xi values are phases and must be >= 0")
        if self.fluctuation < 0:
            raise ConfigError(f"fluctuation must be >= 0, got {self.fluctuation}")
        if self.samples < 2:
            raise ConfigError(f"samples must be >= 2, got {self.samples}")
        if self.t_final <= 0 or self.n_steps < 1:
            raise ConfigError("t_final must be > 0 and n_steps >= 1")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        for name in ("xi_values", "delta_values", "directionality", "rabi_values"):
            if any(not math.isfinite(v) for v in getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.mode in ("simulate", "validate"):
            for name in ("n_atoms", "xi_values", "directionality"):
                if len(getattr(self, name)) != 1:
                    raise ConfigError(
                        f"mode={self.mode} runs a single point; {name} must have "
                        f"exactly one value, got {len(getattr(self, name))}"
                    )
            if len(self.delta_values) not in (1, self.n_atoms[0]):
                raise ConfigError(
                    f"mode={self.mode}: delta must be a single value or one per "
                    f"atom ({self.n_atoms[0]}), got {len(self.delta_values)} values"
                )

    def detunings_for_point(self) -> tuple[float, ...]:
        """Per-atom detunings for the single-point modes."""
        n = self.n_atoms[0]
        if len(self.delta_values) == n:
            return self.delta_values
        return self.delta_values * n

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "n_atoms": list(self.n_atoms),
            "xi": list(self.xi_values),
            "delta": list(self.delta_values),
            "directionality": list(self.directionality),
            "rabi": list(self.rabi_values),
            "fluctuation": self.fluctuation,
            "samples": self.samples,
            "seed": self.seed,
            "t_final": self.t_final,
            "n_steps": self.n_steps,
            "workers": self.workers,
            "out": self.out,
            "format": self.format,
        }


_KNOWN_KEYS = {
    "mode", "n_atoms", "xi", "xi_grid", "delta", "directionality", "gamma_l",
    "rabi", "fluctuation", "samples", "seed", "t_final", "n_steps", "workers",
    "out", "format",
}


def _parse_number_list(value: Any, key: str, kind=float) -> tuple:
    """Accept a scalar, a list, or a comma-separated string of numbers."""
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip() != ""]
        if not parts:
            raise ConfigError(f"{key}: empty value")
        value = parts
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{key}: expected a number or list of numbers, got {value!r}")
    out = []
    for item in value:
        try:
            number = kind(item) if kind is not int else _strict_int(item)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: {item!r} is not a valid {kind.__name__}") from exc
        out.append(number)
    return tuple(out)


def _strict_int(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError("booleans are not counts")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if value != int(value):
            raise ValueError(f"{value} is not an integer")
        return int(value)
    return int(str(value).strip())


def _parse_xi_grid(value: Any) -> tuple[float, ...]:
    """Expand a start:stop:count string to an inclusive grid."""
    if isinstance(value, Mapping):
        try:
            start, stop, count = float(value["start"]), float(value["stop"]), _strict_int(value["count"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"xi_grid mapping needs numeric start/stop/count, got {value!r}") from exc
    elif isinstance(value, str):
        parts = value.split(":")
        if len(parts) != 3:
            raise ConfigError(f"xi_grid must look like start:stop:count, got {value!r}")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), _strict_int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"xi_grid must look like start:stop:count, got {value!r}") from exc
    else:
        raise ConfigError(f"xi_grid must be a string or mapping, got {value!r}")
    if count < 2:
        raise ConfigError(f"xi_grid count must be >= 2, got {count}")
    if stop <= start:
        raise ConfigError(f"xi_grid needs stop > start, got {value!r}")
    step = (stop - start) / (count - 1)
    return tuple(start + k * step for k in range(count))


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read a JSON key-value config document."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object at the top level")
    return data


def _env_layer(env: Mapping[str, str]) -> dict[str, Any]:
    layer = {}
    for key, value in env.items():
        if key.startswith(ENV_PREFIX):
            layer[key[len(ENV_PREFIX):].lower()] = value
    return layer


def parse_config(
    file_values: Mapping[str, Any] | None = None,
    env: Mapping[str, str] | None = None,
    flag_values: Mapping[str, Any] | None = None,
) -> RunConfig:
    """Merge the three configuration layers and resolve a :class:`RunConfig`.

    ``env`` defaults to ``os.environ``; pass ``{}`` to isolate from it.
    Unknown keys anywhere are an error, as is supplying both ``directionality``
    and ``gamma_l`` in the same layer.  Across layers the higher-precedence
    layer wins and silences the other spelling.
    """
    layers = [dict(file_values or {})]  # lowest precedence first
    layers.append(_env_layer(os.environ if env is None else env))
    layers.append({k: v for k, v in (flag_values or {}).items() if v is not None})

    for layer in layers:
        unknown = set(layer) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        if "directionality" in layer and "gamma_l" in layer:
            raise ConfigError(
                "give either directionality or gamma_l, not both"
            )
        if "xi" in layer and "xi_grid" in layer:
            raise ConfigError("give either xi or xi_grid, not both")

    merged: dict[str, Any] = {}
    for layer in layers:  # later layers overwrite earlier ones
        if "directionality" in layer or "gamma_l" in layer:
            merged.pop("directionality", None)
            merged.pop("gamma_l", None)
        if "xi" in layer or "xi_grid" in layer:
            merged.pop("xi", None)
            merged.pop("xi_grid", None)
        merged.update(layer)

    if "mode" not in merged:
        raise ConfigError("mode is required (simulate, sweep, fluctuate, or validate)")
    mode = str(merged["mode"]).strip().lower()

    if "xi" in merged:
        xi_values = _parse_number_list(merged["xi"], "xi")
    elif "xi_grid" in merged:
        xi_values = _parse_xi_grid(merged["xi_grid"])
    else:
        raise ConfigError("xi (value or list) or xi_grid (start:stop:count) is required")

    if "gamma_l" in merged:
        gammas = _parse_number_list(merged["gamma_l"], "gamma_l")
        for g in gammas:
            if not 0.0 <= g <= 1.0:
                raise ConfigError(f"gamma_l must lie in [0, 1], got {g}")
        directionality = tuple(1.0 - 2.0 * g for g in gammas)
    elif "directionality" in merged:
        directionality = _parse_number_list(merged["directionality"], "directionality")
    else:
        directionality = (1.0,)

    if "rabi" in merged:
        rabi_values = _parse_number_list(merged["rabi"], "rabi")
    elif mode == "validate":
        rabi_values = DEFAULT_VALIDATE_RABI
    else:
        rabi_values = (0.01,)
    if mode != "validate" and len(rabi_values) != 1:
        raise ConfigError(f"mode={mode} takes a single rabi value, got {len(rabi_values)}")

    def scalar(key: str, kind, default):
        if key not in merged:
            return default
        values = _parse_number_list(merged[key], key, kind=kind)
        if len(values) != 1:
            raise ConfigError(f"{key} must be a single value, got {merged[key]!r}")
        return values[0]

    out = merged.get("out")
    if out is not None:
        out = str(out)
    fmt = str(merged.get("format", "csv")).strip().lower()

    return RunConfig(
        mode=mode,
        n_atoms=_parse_number_list(merged.get("n_atoms", 2), "n_atoms", kind=int),
        xi_values=xi_values,
        delta_values=_parse_number_list(merged.get("delta", 0.0), "delta"),
        directionality=directionality,
        rabi_values=rabi_values,
        fluctuation=scalar("fluctuation", float, 0.0),
        samples=scalar("samples", int, 200),
        seed=scalar("seed", int, 0),
        t_final=scalar("t_final", float, 50.0),
        n_steps=scalar("n_steps", int, 500),
        workers=scalar("workers", int, 1),
        out=out,
        format=fmt,
    )
