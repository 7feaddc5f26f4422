"""Flat ``key=value`` run configuration.

Keys are exactly the fields of :class:`SimConfig` and :class:`MetricsConfig`
plus ``overlap_rule``. Blank lines and ``#`` comments are ignored; unknown or
repeated keys are errors.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .exceptions import InvalidArgumentError, ParseError
from .fusion import OVERLAP_RULES
from .metrics import MetricsConfig
from .simulator import SimConfig
from .validation import check_choice


def _field_types(cls) -> dict:
    defaults = cls()
    out = {}
    for f in fields(cls):
        default = getattr(defaults, f.name)
        out[f.name] = str if default is None else type(default)
    return out


_SIM_TYPES = _field_types(SimConfig)
_METRIC_TYPES = _field_types(MetricsConfig)
KNOWN_KEYS = {**_SIM_TYPES, **_METRIC_TYPES, "overlap_rule": str}


@dataclass(frozen=True)
class RunConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    overlap_rule: str = "largest"


def _coerce(key: str, raw: str):
    kind = KNOWN_KEYS[key]
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise InvalidArgumentError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {line!r}", source, lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ParseError(f"unknown config key {key!r}", source, lineno)
        if key in values:
            raise ParseError(f"duplicate config key {key!r}", source, lineno)
        try:
            values[key] = _coerce(key, raw)
        except InvalidArgumentError as exc:
            raise ParseError(str(exc), source, lineno) from None
    return values


def build_run_config(values: dict) -> RunConfig:
    sim = SimConfig(**{k: v for k, v in values.items() if k in _SIM_TYPES})
    metrics = MetricsConfig(**{k: v for k, v in values.items() if k in _METRIC_TYPES})
    rule = check_choice(values.get("overlap_rule", "largest"), "overlap_rule", OVERLAP_RULES)
    return RunConfig(sim, metrics, rule)


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    return build_run_config(parse_config_text(path.read_text(encoding="utf-8"), str(path)))


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for obj in (cfg.sim, cfg.metrics):
        for f in fields(obj):
            value = getattr(obj, f.name)
            if value is not None:
                lines.append(f"{f.name}={value}")
    lines.append(f"overlap_rule={cfg.overlap_rule}")
    return "\n".join(lines) + "\n"
