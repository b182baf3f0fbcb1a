"""Experiment configuration: flat JSON key/value files plus CLI overrides."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Union

EXPERIMENTS = ("loop", "sweep", "berry", "fivelevel", "polarization", "verify")
FRAMES = ("lab", "rotating")

Number = Union[int, float]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    r: Optional[list[float]] = None
    r1: Optional[float] = None
    r2: Optional[float] = None
    xi: Optional[list[float]] = None
    xi_range: Optional[str] = None
    phi0: float = 0.0
    frame: str = "lab"
    steps_per_period: Optional[int] = None
    record_stride: int = 64
    berry_steps: int = 10_000
    out: str = "steerlab-out"

    def echo(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


KEYS = tuple(f.name for f in dataclasses.fields(ExperimentConfig))

_DEFAULTS = {
    "loop": {"r": [0.5], "xi": [1e-3]},
    "sweep": {"r": [0.5]},
    "berry": {"r": [0.25, 0.5, 1.0]},
    "fivelevel": {"r1": 0.5, "r2": 1.0, "xi": [1e-3]},
    "polarization": {"r1": 0.5, "r2": 1.0, "xi": [1e-3]},
    "verify": {},
}


def parse_range(text: Union[str, Mapping[str, Number]]) -> list[float]:
    """Expand ``start:stop:factor`` into a geometric list, ``stop`` inclusive."""
    if isinstance(text, Mapping):
        try:
            start, stop, factor = (float(text[k]) for k in ("start", "stop", "factor"))
        except KeyError as err:
            raise ConfigError(f"xi_range: missing {err.args[0]!r}") from None
    else:
        parts = str(text).split(":")
        if len(parts) != 3:
            raise ConfigError(f"xi_range: expected start:stop:factor, got {text!r}")
        try:
            start, stop, factor = (float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"xi_range: non-numeric entry in {text!r}") from None
    if not (start > 0 and stop > 0 and math.isfinite(start) and math.isfinite(stop)):
        raise ConfigError("xi_range: start and stop must be finite and > 0")
    if not (factor > 0 and factor != 1 and math.isfinite(factor)):
        raise ConfigError("xi_range: factor must be > 0 and != 1")
    if (stop - start) * (factor - 1) < 0:
        raise ConfigError("xi_range: factor moves away from stop")
    out, k = [], 0
    slack = 1e-9
    while True:
        x = start * factor ** k
        if (factor < 1 and x < stop * (1 - slack)) or (factor > 1 and x > stop * (1 + slack)):
            break
        out.append(x)
        k += 1
        if k > 10_000:
            raise ConfigError("xi_range: more than 10000 points")
    return out


def _as_list(name: str, value) -> list[float]:
    vals = value if isinstance(value, (list, tuple)) else [value]
    out = []
    for v in vals:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {v!r}")
        out.append(float(v))
    if not out:
        raise ConfigError(f"{name}: empty list")
    return out


def _check_finite(name: str, v: float, lo: float, strict: bool) -> None:
    if not math.isfinite(v):
        raise ConfigError(f"{name}: must be finite, got {v}")
    if (strict and not v > lo) or (not strict and not v >= lo):
        raise ConfigError(f"{name}: must be {'>' if strict else '>='} {lo}, got {v}")


def from_mapping(raw: Mapping[str, Any]) -> ExperimentConfig:
    """Validate a flat mapping and apply per-experiment defaults."""
    unknown = sorted(set(raw) - set(KEYS))
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment: must be one of {', '.join(EXPERIMENTS)}, got {exp!r}")
    vals = {k: v for k, v in raw.items() if v is not None}
    for k, v in _DEFAULTS[exp].items():
        vals.setdefault(k, v)

    if "xi_range" in vals:
        if "xi" in raw and raw["xi"] is not None:
            raise ConfigError("xi and xi_range are mutually exclusive")
        vals["xi"] = parse_range(vals["xi_range"])
        if not isinstance(vals["xi_range"], str):
            r = vals["xi_range"]
            vals["xi_range"] = f"{r['start']}:{r['stop']}:{r['factor']}"
    if "r" in vals:
        vals["r"] = _as_list("r", vals["r"])
        for v in vals["r"]:
            _check_finite("r", v, 0.0, strict=False)
    if "xi" in vals:
        vals["xi"] = _as_list("xi", vals["xi"])
        for v in vals["xi"]:
            _check_finite("xi", v, 0.0, strict=True)
    for k in ("r1", "r2"):
        if k in vals:
            v = _as_list(k, vals[k])
            if len(v) != 1:
                raise ConfigError(f"{k}: expected a single number")
            _check_finite(k, v[0], 0.0, strict=False)
            vals[k] = v[0]
    if exp in ("fivelevel", "polarization") and "r1" not in raw and raw.get("r") is not None:
        vals["r1"] = vals["r"][0]
        vals.pop("r")
    if "phi0" in vals:
        vals["phi0"] = _as_list("phi0", vals["phi0"])[0]
        _check_finite("phi0", vals["phi0"], -math.inf, strict=True)
    if vals.get("frame", "lab") not in FRAMES:
        raise ConfigError(f"frame: must be one of {', '.join(FRAMES)}, got {vals['frame']!r}")
    for k, lo in (("steps_per_period", 1), ("record_stride", 1), ("berry_steps", 8)):
        if k in vals:
            v = vals[k]
            if isinstance(v, bool) or not isinstance(v, int) or v < lo:
                raise ConfigError(f"{k}: must be an integer >= {lo}, got {v!r}")
    if exp == "sweep" and "xi" not in vals:
        raise ConfigError("xi: sweep needs xi (list) or xi_range")
    if not isinstance(vals.get("out", ""), str):
        raise ConfigError("out: must be a path string")
    return ExperimentConfig(**vals)


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """Read a JSON config file (if given) and apply ``overrides`` on top."""
    raw: dict[str, Any] = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as err:
            raise ConfigError(f"config file {path}: {err}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a flat JSON object")
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    return from_mapping(raw)
