"""TOML experiment configuration with strict key checking.

This module stays free of numpy so the command-line entry point can parse
arguments and set thread limits before any numerical library loads.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = ["ConfigError", "ExperimentConfig", "load_config"]


class ConfigError(ValueError):
    """Invalid or incomplete configuration."""


def _number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _as_int(section, key, v) -> int:
    if _number(v) and float(v).is_integer():
        return int(v)
    raise ConfigError(f"[{section}] {key} must be an integer, got {v!r}")


def _as_float(section, key, v) -> float:
    if _number(v) and math.isfinite(v):
        return float(v)
    raise ConfigError(f"[{section}] {key} must be a finite number, got {v!r}")


def _as_bool(section, key, v) -> bool:
    if isinstance(v, bool):
        return v
    raise ConfigError(f"[{section}] {key} must be true or false, got {v!r}")


def _as_str(section, key, v) -> str:
    if isinstance(v, str):
        return v
    raise ConfigError(f"[{section}] {key} must be a string, got {v!r}")


def _as_vector(section, key, v) -> list[float]:
    if isinstance(v, list) and v and all(_number(x) and math.isfinite(x) for x in v):
        return [float(x) for x in v]
    raise ConfigError(f"[{section}] {key} must be a non-empty list of numbers, got {v!r}")


def _as_int_list(section, key, v) -> list[int]:
    if isinstance(v, list) and v:
        return [_as_int(section, key, x) for x in v]
    raise ConfigError(f"[{section}] {key} must be a non-empty list of integers")


def _as_str_list(section, key, v) -> list[str]:
    if isinstance(v, str):
        return [v]
    if isinstance(v, list) and v and all(isinstance(x, str) for x in v):
        return list(v)
    raise ConfigError(f"[{section}] {key} must be a string or list of strings")


def _as_float_list(section, key, v) -> list[float]:
    if _number(v):
        return [float(v)]
    return _as_vector(section, key, v)


def _as_p(section, key, v) -> float:
    if isinstance(v, str) and v.lower() in ("inf", "infinity"):
        return math.inf
    p = _as_float(section, key, v) if _number(v) else math.nan
    if not p >= 1:
        raise ConfigError(f'[{section}] {key} must be a number >= 1 or "inf", got {v!r}')
    return p


SCHEMA: dict[str, dict[str, Any]] = {
    "cost_set": {"p": _as_p, "lo": _as_vector, "hi": _as_vector},
    "strategic": {"u_star": _as_float, "lambda": _as_float},
    "solve": {
        "method": _as_str,
        "T": _as_int,
        "B": _as_float,
        "step_scale": _as_float,
        "batch_size": _as_int,
        "epsilon": _as_float,
        "seed": _as_int,
        "project_to_ball": _as_bool,
        "q_regularized": _as_bool,
        "delta": _as_float,
    },
    "data": {
        "path": _as_str,
        "generator": _as_str,
        "n": _as_int,
        "mu0": _as_vector,
        "sigma_sq": _as_float,
        "seed": _as_int,
    },
    "output": {"directory": _as_str},
    "hardness": {
        "c1": _as_vector,
        "c2": _as_vector,
        "eps_mix": _as_float,
        "beta_star": _as_vector,
        "alpha": _as_float,
        "B": _as_float,
        "n_samples": _as_int,
        "seed": _as_int,
        "d_values": _as_int_list,
        "spectra": _as_str_list,
        "eigen_errors": _as_float_list,
    },
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "cost_set": {"p": 2.0},
    "strategic": {"lambda": 0.0},
    "solve": {
        "method": "subgradient",
        "step_scale": 1.0,
        "batch_size": 32,
        "seed": 0,
        "project_to_ball": False,
        "q_regularized": True,
        "delta": 0.05,
    },
    "data": {"seed": 0},
    "output": {"directory": "."},
    "hardness": {
        "eps_mix": 0.3,
        "alpha": 1.0,
        "B": 1.0,
        "n_samples": 100_000,
        "seed": 0,
        "spectra": ["harmonic"],
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    sections: dict[str, dict[str, Any]]
    base_dir: Path
    digest: str

    def section(self, name: str) -> dict[str, Any]:
        return self.sections.get(name, {})

    def require(self, section: str, key: str):
        sec = self.sections.get(section)
        if sec is None:
            raise ConfigError(f"missing section [{section}]")
        if key not in sec:
            raise ConfigError(f"[{section}] is missing required key {key!r}")
        return sec[key]

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def load_config(path: str | Path, env: dict[str, str] | None = None) -> ExperimentConfig:
    """Parse, type-check and default a config file.

    ``STRAT_SEED`` in ``env`` (default: the process environment) overrides
    ``[solve].seed``. The digest hashes the effective settings, so it changes
    with the override.
    """
    env = os.environ if env is None else env
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None

    sections: dict[str, dict[str, Any]] = {}
    for name, body in raw.items():
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]; expected one of {', '.join(SCHEMA)}")
        if not isinstance(body, dict):
            raise ConfigError(f"[{name}] must be a table")
        parsed = dict(DEFAULTS.get(name, {}))
        for key, value in body.items():
            if key not in SCHEMA[name]:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
            parsed[key] = SCHEMA[name][key](name, key, value)
        sections[name] = parsed
    for name in ("solve", "output"):
        sections.setdefault(name, dict(DEFAULTS[name]))

    if "STRAT_SEED" in env:
        try:
            sections["solve"]["seed"] = int(env["STRAT_SEED"])
        except ValueError:
            raise ConfigError(f"STRAT_SEED must be an integer, got {env['STRAT_SEED']!r}") from None

    method = sections["solve"]["method"]
    if method not in ("subgradient", "smda"):
        raise ConfigError(f"[solve] method must be 'subgradient' or 'smda', got {method!r}")
    data = sections.get("data")
    if data is not None and ("path" in data) == ("generator" in data):
        raise ConfigError("[data] needs exactly one of 'path' or 'generator'")

    canonical = json.dumps(sections, sort_keys=True, default=str, allow_nan=True)
    digest = hashlib.sha256(canonical.encode()).hexdigest()
    return ExperimentConfig(sections, path.resolve().parent, digest)
