"""Plain ``key = value`` config files shared by tracker and scene settings."""
from __future__ import annotations

import dataclasses
import typing


class ConfigError(ValueError):
    pass


def parse_key_values(text: str, repeatable: frozenset[str] = frozenset()) -> dict[str, typing.Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Keys listed in ``repeatable`` collect every occurrence into a list; any
    other key may appear once.
    """
    out: dict[str, typing.Any] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {no}: empty key")
        if key in repeatable:
            out.setdefault(key, []).append(value)
        elif key in out:
            raise ConfigError(f"line {no}: duplicate key {key!r}")
        else:
            out[key] = value
    return out


def _coerce(value: str, tp, key: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union or (origin is not None and type(None) in args):
        if value.lower() in ("none", ""):
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], key)
    try:
        if tp is bool:
            low = value.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if tp is int:
            return int(value)
        if tp is float:
            return float(value)
        if tp is str:
            return value
    except ValueError:
        raise ConfigError(f"{key}: cannot read {value!r} as {tp.__name__}") from None
    raise ConfigError(f"{key}: unsupported field type {tp!r}")


def build_dataclass(cls, values: dict[str, str], skip: frozenset[str] = frozenset()):
    """Instantiate ``cls`` from string values; unknown keys are errors."""
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - names - skip)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    kwargs = {k: _coerce(v, hints[k], k) for k, v in values.items() if k not in skip}
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from None


def dataclass_lines(obj) -> list[str]:
    return [f"{f.name} = {getattr(obj, f.name)}" for f in dataclasses.fields(obj)]
