"""
Parsers for the flat key = value configuration and sweep files.
"""

import math
import re
from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from sber_outage.core.errors import ConfigError, ConfigErrorCode
from sber_outage.core.logging_utils import get_logger
from sber_outage.data.models import (
    AlphaVariant,
    CircuitProfile,
    Duplex,
    Evaluator,
    SweepSpec,
    SystemConfig,
    axis_keys,
    config_field_names,
)

logger = get_logger(__name__)

INT_KEYS = {"q_chains", "m_tx", "n_rx", "p_eh_antennas"}
BOOL_KEYS = {"ideal_power", "hd_count_rx_chains"}
ENUM_KEYS = {"mode": Duplex, "alpha_variant": AlphaVariant}

SWEEP_INT_KEYS = {"mc_budget", "seed", "gl_order", "q_max"}
SWEEP_KEYS = {"axis1", "axis2", "evaluator", "delta", "backend", "name"} | SWEEP_INT_KEYS

_LINE_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")
_RANGE_RE = re.compile(r"^\s*([^:,]+):([^:,]+):([^:,]+)\s*$")


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def _parse_int(key: str, raw: str) -> int:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(ConfigErrorCode.BAD_VALUE, f"{key}: '{raw}' is not an integer")
    if not value.is_integer():
        raise ConfigError(ConfigErrorCode.BAD_VALUE, f"{key}: '{raw}' is not an integer")
    return int(value)


def _parse_float(key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(ConfigErrorCode.BAD_VALUE, f"{key}: '{raw}' is not a number")
    if math.isnan(value):
        raise ConfigError(ConfigErrorCode.BAD_VALUE, f"{key}: NaN is not allowed")
    return value


def parse_value(key: str, raw: str) -> Any:
    """Convert one raw value to the type of config field `key`."""
    if key not in config_field_names():
        raise ConfigError(ConfigErrorCode.UNKNOWN_KEY, f"unknown config key '{key}'")
    raw = raw.strip()
    if key in INT_KEYS:
        return _parse_int(key, raw)
    if key in BOOL_KEYS:
        lowered = raw.lower()
        if lowered in ("true", "yes", "1"):
            return True
        if lowered in ("false", "no", "0"):
            return False
        raise ConfigError(ConfigErrorCode.BAD_VALUE, f"{key}: '{raw}' is not true/false")
    if key in ENUM_KEYS:
        enum_cls = ENUM_KEYS[key]
        for member in enum_cls:
            if raw.lower() in (member.value.lower(), member.name.lower()):
                return member
        choices = "|".join(m.value for m in enum_cls)
        raise ConfigError(ConfigErrorCode.BAD_VALUE, f"{key}: '{raw}' is not one of {choices}")
    return _parse_float(key, raw)


def _iter_pairs(text: str) -> List[Tuple[int, str, str]]:
    pairs = []
    for number, line in enumerate(text.splitlines(), start=1):
        content = _strip_comment(line)
        if not content.strip():
            continue
        match = _LINE_RE.match(content)
        if not match:
            raise ConfigError(
                ConfigErrorCode.SYNTAX, f"line {number}: expected 'key = value', got '{line.strip()}'"
            )
        pairs.append((number, match.group(1), match.group(2)))
    return pairs


def complete_split(values: Dict[str, Any]) -> Dict[str, Any]:
    """
    Fill the antenna split from what was given.

    HD uses all antennas both ways; FD derives the missing one of
    (q_chains, m_tx, n_rx) from the other two.
    """
    values = dict(values)
    mode = values.get("mode", Duplex.FD)
    if mode is Duplex.HD:
        q = values.get("q_chains", SystemConfig.q_chains)
        values.setdefault("q_chains", q)
        values.setdefault("m_tx", q)
        values.setdefault("n_rx", q)
        return values
    given = {k for k in ("q_chains", "m_tx", "n_rx") if k in values}
    if given == {"q_chains", "m_tx"}:
        values["n_rx"] = values["q_chains"] - values["m_tx"]
    elif given == {"q_chains", "n_rx"}:
        values["m_tx"] = values["q_chains"] - values["n_rx"]
    elif given == {"m_tx", "n_rx"}:
        values["q_chains"] = values["m_tx"] + values["n_rx"]
    elif given == {"q_chains"}:
        values["m_tx"] = values["q_chains"] // 2
        values["n_rx"] = values["q_chains"] - values["q_chains"] // 2
    return values


def build_config(values: Dict[str, Any], validate: bool = True) -> SystemConfig:
    """SystemConfig from parsed field values (circuit fields inlined)."""
    circuit_keys = {f.name for f in fields(CircuitProfile)}
    values = complete_split(values)
    circuit = CircuitProfile(**{k: v for k, v in values.items() if k in circuit_keys})
    config = SystemConfig(circuit=circuit, **{k: v for k, v in values.items() if k not in circuit_keys})
    return config.validate() if validate else config


def parse_config_text(text: str, validate: bool = True) -> SystemConfig:
    """Parse a key = value configuration."""
    values: Dict[str, Any] = {}
    for number, key, raw in _iter_pairs(text):
        if key in values:
            logger.warning(f"line {number}: '{key}' given twice, keeping the last value")
        values[key] = parse_value(key, raw)
    return build_config(values, validate=validate)


def load_config(path: Path, validate: bool = True) -> SystemConfig:
    """Read and validate a configuration file."""
    text = Path(path).read_text(encoding="utf-8")
    config = parse_config_text(text, validate=validate)
    logger.info(f"Loaded config from {path} ({config.mode.value}, Q={config.q_chains})")
    return config


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if hasattr(value, "value"):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: SystemConfig) -> str:
    """Write every field back as key = value lines; parse_config_text inverts it."""
    lines = [f"{key} = {format_value(value)}" for key, value in config.to_dict().items()]
    return "\n".join(lines) + "\n"


def parse_axis(raw: str) -> Tuple[str, List[Any]]:
    """
    'field: v1, v2, ...' or 'field: start:stop:step' (stop included).

    'field_a+field_b: ...' links two fields that take the same values.
    """
    if ":" not in raw:
        raise ConfigError(ConfigErrorCode.SYNTAX, f"axis '{raw}' needs 'field: values'")
    name, spec = raw.split(":", 1)
    keys = axis_keys(name)
    for k in keys:
        if k not in config_field_names():
            raise ConfigError(ConfigErrorCode.UNKNOWN_KEY, f"sweep axis '{k}' is not a config key")
    kinds = {_key_kind(k) for k in keys}
    if len(kinds) > 1:
        raise ConfigError(ConfigErrorCode.BAD_VALUE, f"linked axis '{name.strip()}' mixes value types")
    key = keys[0]
    spec = spec.strip()
    match = _RANGE_RE.match(spec)
    if match:
        start, stop, step = (_parse_float(key, g) for g in match.groups())
        if step == 0 or (stop - start) / step < 0:
            raise ConfigError(ConfigErrorCode.BAD_VALUE, f"axis '{key}': empty range {spec}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [start + i * step for i in range(count)]
        if key in INT_KEYS:
            values = [int(round(v)) for v in values]
        elif _key_kind(key) != "float":
            raise ConfigError(ConfigErrorCode.BAD_VALUE, f"axis '{key}' cannot take a numeric range")
        else:
            values = [round(v, 12) for v in values]
        return "+".join(keys), values
    values = [parse_value(key, item) for item in spec.split(",") if item.strip()]
    if not values:
        raise ConfigError(ConfigErrorCode.BAD_VALUE, f"sweep axis '{key}' has no values")
    return "+".join(keys), values


def _key_kind(key: str) -> str:
    if key in INT_KEYS:
        return "int"
    if key in BOOL_KEYS:
        return "bool"
    if key in ENUM_KEYS:
        return key
    return "float"


def parse_sweep_text(text: str, overrides: Optional[Dict[str, str]] = None) -> SweepSpec:
    """
    Parse a sweep file: base config lines plus axis1, optional axis2,
    evaluator, backend, mc_budget, seed, gl_order, delta, q_max and name.
    """
    raw_pairs = {key: raw for _, key, raw in _iter_pairs(text)}
    raw_pairs.update(overrides or {})

    base_values: Dict[str, Any] = {}
    sweep_kwargs: Dict[str, Any] = {}
    for key, raw in raw_pairs.items():
        if key in SWEEP_KEYS:
            if key in ("axis1", "axis2"):
                sweep_kwargs[key] = parse_axis(raw)
            elif key == "evaluator":
                try:
                    sweep_kwargs[key] = Evaluator(raw.strip())
                except ValueError:
                    choices = "|".join(e.value for e in Evaluator)
                    raise ConfigError(
                        ConfigErrorCode.BAD_VALUE, f"evaluator '{raw}' is not one of {choices}"
                    )
            elif key in SWEEP_INT_KEYS:
                sweep_kwargs[key] = _parse_int(key, raw)
            elif key == "delta":
                sweep_kwargs[key] = _parse_float(key, raw)
            else:
                sweep_kwargs[key] = raw.strip()
        else:
            base_values[key] = parse_value(key, raw)

    if "axis1" not in sweep_kwargs:
        raise ConfigError(ConfigErrorCode.SYNTAX, "sweep file needs an 'axis1' line")
    base = build_config(base_values, validate=False)
    return SweepSpec(base=base, **sweep_kwargs).validate()


def load_sweep(path: Path, overrides: Optional[Dict[str, str]] = None) -> SweepSpec:
    """Read a sweep file."""
    spec = parse_sweep_text(Path(path).read_text(encoding="utf-8"), overrides)
    spec.name = spec.name if spec.name != "sweep" else Path(path).stem
    logger.info(f"Loaded sweep '{spec.name}' with {len(spec.grid())} points")
    return spec
