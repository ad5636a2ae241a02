"""Search-space definition and normalized/concrete value mapping.

Tuning operates on the unit hypercube [0, 1]^d. Every dimension is backed
by a named parameter with concrete inclusive bounds and either linear or
logarithmic scaling. This module owns:

- the parameter and space types plus their validation,
- the bidirectional mapping between normalized coordinates and concrete
  parameter values (integer parameters are rounded half-up at mapping
  time and clamped to their bounds),
- loading parameter-space files (YAML, one record per parameter with
  fields ``name``, ``min``, ``max``, ``scale``, ``type``, ``unit`` and an
  optional ``default``),
- human-readable value formatting with decimal SI suffixes for reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import yaml

from .errors import ConfigurationError

LINEAR = "linear"
LOGARITHMIC = "logarithmic"
INTEGER = "integer"
REAL = "real"

_SCALE_ALIASES = {"linear": LINEAR, "log": LOGARITHMIC, "logarithmic": LOGARITHMIC}
_TYPE_ALIASES = {"int": INTEGER, "integer": INTEGER, "real": REAL, "float": REAL}


@dataclass(frozen=True)
class ParameterDefinition:
    """One tunable dimension: concrete bounds, scaling, and value type."""

    name: str
    min: float
    max: float
    scale: str = LINEAR
    value_type: str = REAL
    unit: str = ""
    default: float | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ConfigurationError("parameter name must be non-empty")
        if self.scale not in (LINEAR, LOGARITHMIC):
            raise ConfigurationError(
                f"parameter {self.name!r}: scale must be 'linear' or 'logarithmic', got {self.scale!r}"
            )
        if self.value_type not in (INTEGER, REAL):
            raise ConfigurationError(
                f"parameter {self.name!r}: type must be 'integer' or 'real', got {self.value_type!r}"
            )
        if not (self.min < self.max):
            raise ConfigurationError(
                f"parameter {self.name!r}: min ({self.min}) must be < max ({self.max})"
            )
        if self.scale == LOGARITHMIC and self.min <= 0:
            raise ConfigurationError(
                f"parameter {self.name!r}: logarithmic scale requires min > 0, got {self.min}"
            )
        if self.value_type == INTEGER:
            if self.min != int(self.min) or self.max != int(self.max):
                raise ConfigurationError(
                    f"parameter {self.name!r}: integer parameters need integer bounds, "
                    f"got [{self.min}, {self.max}]"
                )
        if self.default is not None and not (self.min <= self.default <= self.max):
            raise ConfigurationError(
                f"parameter {self.name!r}: default {self.default} outside [{self.min}, {self.max}]"
            )

    def to_concrete(self, u: float) -> float | int:
        """Map one normalized coordinate in [0, 1] to a concrete value."""
        if not 0.0 <= u <= 1.0:
            raise ValueError(f"parameter {self.name!r}: normalized coordinate {u} outside [0, 1]")
        if u == 0.0:
            value = float(self.min)
        elif u == 1.0:
            value = float(self.max)
        elif self.scale == LOGARITHMIC:
            value = self.min * (self.max / self.min) ** u
        else:
            value = self.min + u * (self.max - self.min)
        if self.value_type == INTEGER:
            rounded = math.floor(value + 0.5)  # round half-up, order independent
            return int(min(max(rounded, self.min), self.max))
        return float(min(max(value, self.min), self.max))

    def to_normalized(self, value: float) -> float:
        """Inverse of :meth:`to_concrete`, ignoring integer rounding."""
        if not self.min <= value <= self.max:
            raise ConfigurationError(
                f"parameter {self.name!r}: value {value} outside [{self.min}, {self.max}]"
            )
        if self.scale == LOGARITHMIC:
            u = math.log(value / self.min) / math.log(self.max / self.min)
        else:
            u = (value - self.min) / (self.max - self.min)
        return float(min(max(u, 0.0), 1.0))

    def to_dict(self) -> dict:
        record = {
            "name": self.name,
            "min": self.min,
            "max": self.max,
            "scale": self.scale,
            "type": self.value_type,
            "unit": self.unit,
        }
        if self.default is not None:
            record["default"] = self.default
        return record


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered collection of parameters; the search space has one
    dimension per parameter, in list order."""

    parameters: tuple[ParameterDefinition, ...]

    def __post_init__(self) -> None:
        if len(self.parameters) < 1:
            raise ConfigurationError("a parameter space needs at least one parameter")
        names = [p.name for p in self.parameters]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ConfigurationError(f"duplicate parameter names: {dupes}")
        object.__setattr__(self, "parameters", tuple(self.parameters))

    @property
    def dimension(self) -> int:
        return len(self.parameters)

    def names(self) -> list[str]:
        return [p.name for p in self.parameters]

    def get(self, name: str) -> ParameterDefinition:
        for p in self.parameters:
            if p.name == name:
                return p
        raise KeyError(f"unknown parameter: {name!r}")

    def default_values(self) -> dict[str, float | int]:
        """Concrete values of the declared default configuration."""
        missing = [p.name for p in self.parameters if p.default is None]
        if missing:
            raise ConfigurationError(f"parameters without a default value: {missing}")
        return {
            p.name: (int(p.default) if p.value_type == INTEGER else float(p.default))
            for p in self.parameters
        }

    def to_dict(self) -> dict:
        return {"parameters": [p.to_dict() for p in self.parameters]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ParameterSpace":
        if not isinstance(data, Mapping) or "parameters" not in data:
            raise ConfigurationError("parameter space document needs a top-level 'parameters' list")
        records = data["parameters"]
        if not isinstance(records, list):
            raise ConfigurationError("'parameters' must be a list of records")
        return cls(tuple(_parse_parameter(i, rec) for i, rec in enumerate(records)))


def _parse_parameter(index: int, record) -> ParameterDefinition:
    if not isinstance(record, Mapping):
        raise ConfigurationError(f"parameter record #{index + 1} is not a mapping")
    label = record.get("name", f"#{index + 1}")
    for key in ("name", "min", "max", "scale", "type"):
        if key not in record:
            raise ConfigurationError(f"parameter {label!r}: missing required field {key!r}")
    scale = _SCALE_ALIASES.get(str(record["scale"]).lower())
    if scale is None:
        raise ConfigurationError(f"parameter {label!r}: unknown scale {record['scale']!r}")
    value_type = _TYPE_ALIASES.get(str(record["type"]).lower())
    if value_type is None:
        raise ConfigurationError(f"parameter {label!r}: unknown type {record['type']!r}")
    try:
        lo, hi = float(record["min"]), float(record["max"])
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"parameter {label!r}: non-numeric bound ({exc})") from None
    default = record.get("default")
    if default is not None:
        try:
            default = float(default)
        except (TypeError, ValueError):
            raise ConfigurationError(f"parameter {label!r}: non-numeric default") from None
    return ParameterDefinition(
        name=str(record["name"]),
        min=lo,
        max=hi,
        scale=scale,
        value_type=value_type,
        unit=str(record.get("unit", "")),
        default=default,
    )


def load_space(path: str | Path) -> ParameterSpace:
    """Load and validate a parameter-space file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read parameter space file {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark is not None else ""
        raise ConfigurationError(f"parse error in {path}{where}: {exc}") from None
    return ParameterSpace.from_dict(data)


def dump_space(space: ParameterSpace) -> str:
    return yaml.safe_dump(space.to_dict(), sort_keys=False)


def map_to_concrete(space: ParameterSpace, u) -> dict[str, float | int]:
    """Map a normalized point to concrete parameter values, in space order."""
    coords = np.asarray(u, dtype=float).reshape(-1)
    if coords.shape[0] != space.dimension:
        raise ValueError(
            f"normalized point has {coords.shape[0]} coordinates, space has {space.dimension}"
        )
    return {p.name: p.to_concrete(float(c)) for p, c in zip(space.parameters, coords)}


def map_to_normalized(space: ParameterSpace, values: Mapping[str, float]) -> np.ndarray:
    """Map concrete parameter values back to normalized coordinates."""
    unknown = sorted(set(values) - set(space.names()))
    if unknown:
        raise ConfigurationError(f"unknown parameters: {unknown}")
    missing = [n for n in space.names() if n not in values]
    if missing:
        raise ConfigurationError(f"missing parameters: {missing}")
    return np.array([p.to_normalized(float(values[p.name])) for p in space.parameters])


_BYTE_SUFFIXES = ("B", "KB", "MB", "GB", "TB", "PB")
_COUNT_SUFFIXES = ("", "K", "M", "G", "T", "P")
_COUNT_UNITS = ("", "count", "records")


def _group_digits(value: float) -> str:
    if value == int(value):
        return f"{int(value):,}".replace(",", " ")
    whole, frac = f"{value:.10g}".split(".") if "." in f"{value:.10g}" else (f"{value:.10g}", "")
    grouped = f"{int(whole):,}".replace(",", " ")
    return f"{grouped}.{frac}" if frac else grouped


def _scaled(value: float, suffixes: Iterable[str]) -> str:
    suffixes = list(suffixes)
    k = 0
    scaled = value
    while abs(scaled) >= 1000 and k < len(suffixes) - 1:
        scaled /= 1000.0
        k += 1
    text = f"{scaled:.1f}"
    if text.endswith(".0"):
        text = text[:-2]
    suffix = suffixes[k]
    return f"{text} {suffix}".rstrip()


def format_si(value: float, unit: str = "") -> str:
    """Render a value the way tuning reports print it: decimal SI suffixes
    for byte sizes (>= 1 kB) and large counts (>= 10'000), digit grouping
    otherwise. Time-like units are never scaled."""
    v = float(value)
    if unit == "bytes":
        if abs(v) >= 1000:
            return _scaled(v, _BYTE_SUFFIXES)
        return f"{_group_digits(v)} B"
    if unit in _COUNT_UNITS:
        if abs(v) >= 10_000:
            return _scaled(v, _COUNT_SUFFIXES)
        return _group_digits(v)
    return _group_digits(v)
