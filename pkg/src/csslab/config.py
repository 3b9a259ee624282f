"""Flat ``key = value`` run configuration.

Lines are ``key = value``; ``#`` starts a comment; blank lines are ignored.
Unknown keys, repeated keys and malformed values raise
:class:`~csslab.errors.ConfigError` naming the key and line.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Callable, Iterable

from .errors import ConfigError

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int(text: str) -> int:
    return int(text.strip())


def _float(text: str) -> float:
    return float(text.strip())


def _pair(text: str) -> tuple[int, int]:
    parts = [p for p in text.replace(",", " ").split()]
    if len(parts) != 2:
        raise ValueError(f"expected two integers, got {text!r}")
    return int(parts[0]), int(parts[1])


def _str(text: str) -> str:
    return text.strip()


@dataclass(frozen=True)
class RunConfig:
    """Every configurable knob with its default.

    Run: ``n``, ``L``, ``dt``, ``t_end``, ``g``, ``checkpoint_stride``,
    ``dealias``. Datum: ``data`` (gaussian, plane_wave, ring, file),
    ``eps1``, ``width``, ``momentum`` (two lattice integers), ``twist``,
    ``data_file``. Checks: ``order_check`` (plane-wave dt-halving study),
    ``determinism_check`` (run twice, compare CSV bytes), ``identity_n``,
    ``gn_samples``, ``oracle_n``, ``oracle_t``, ``ibp_L``, ``suite``
    (all, identities, biot_savart), ``seed``.
    """

    n: int = 256
    L: float = 40.0
    dt: float = 1e-3
    t_end: float = 10.0
    g: float = 1.0
    data: str = "gaussian"
    eps1: float = 0.05
    width: float = 1.0
    momentum: tuple[int, int] = (3, 0)
    twist: int = 1
    data_file: str = ""
    checkpoint_stride: int = 250
    dealias: bool = True
    order_check: bool = False
    determinism_check: bool = False
    identity_n: int = 128
    gn_samples: int = 1000
    oracle_n: int = 8
    oracle_t: float = 0.7
    ibp_L: float = 16.0
    suite: str = "all"
    seed: int = 0

    def validate(self) -> "RunConfig":
        for key in ("n", "identity_n", "oracle_n"):
            v = getattr(self, key)
            if v < 8 or v & (v - 1):
                raise ConfigError(f"must be a power of two >= 8, got {v}", key=key)
        checks: list[tuple[str, Callable[[Any], bool], str]] = [
            ("L", lambda v: v > 0, "must be positive"),
            ("dt", lambda v: v > 0, "must be positive"),
            ("t_end", lambda v: v >= 0, "must be >= 0"),
            ("eps1", lambda v: v > 0, "must be positive"),
            ("width", lambda v: v > 0, "must be positive"),
            ("checkpoint_stride", lambda v: v >= 1, "must be >= 1"),
            ("gn_samples", lambda v: v >= 1, "must be >= 1"),
            ("oracle_t", lambda v: v >= 0, "must be >= 0"),
            ("ibp_L", lambda v: v > 0, "must be positive"),
            ("data", lambda v: v in ("gaussian", "plane_wave", "ring", "file"), "unknown datum kind"),
            ("suite", lambda v: v in ("all", "identities", "biot_savart"), "unknown suite"),
        ]
        for key, ok, msg in checks:
            if not ok(getattr(self, key)):
                raise ConfigError(f"{msg}: {getattr(self, key)!r}", key=key)
        if self.data == "file" and not self.data_file:
            raise ConfigError("data=file needs data_file", key="data_file")
        ratio = self.t_end / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigError(f"t_end={self.t_end} is not a multiple of dt={self.dt}", key="t_end")
        return self


_PARSERS: dict[str, Callable[[str], Any]] = {}
for _f in fields(RunConfig):
    _PARSERS[_f.name] = {
        "int": _int,
        "float": _float,
        "str": _str,
        "bool": _bool,
        "tuple[int, int]": _pair,
    }[str(_f.type)]

KEYS = tuple(_PARSERS)


def _assign(values: dict, key: str, raw: str, line: int | None) -> None:
    if key not in _PARSERS:
        raise ConfigError("unknown key", key=key, line=line)
    try:
        values[key] = _PARSERS[key](raw)
    except ValueError as exc:
        raise ConfigError(f"bad value {raw.strip()!r}: {exc}", key=key, line=line) from None


def parse_config_text(text: str) -> dict:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError("repeated key", key=key, line=lineno)
        _assign(values, key, value, lineno)
    return values


def parse_override(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise ConfigError(f"override must be KEY=VALUE, got {text!r}")
    key, value = (s.strip() for s in text.split("=", 1))
    return key, value


def load_config(path: str | Path | None, overrides: Iterable[str] = ()) -> RunConfig:
    """Read ``path`` (or start from defaults) and apply ``KEY=VALUE`` overrides."""
    values: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
        values = parse_config_text(text)
    for item in overrides:
        key, raw = parse_override(item)
        _assign(values, key, raw, None)
    try:
        cfg = replace(RunConfig(), **values)
    except TypeError as exc:  # pragma: no cover - guarded by _assign
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def defaults_help() -> str:
    cfg = RunConfig()
    return "\n".join(f"  {f.name} = {getattr(cfg, f.name)!r}" for f in fields(cfg))
