"""
Flat ``key = value`` run configuration.

One pair per line, ``#`` starts a comment. Omitted keys take the defaults
below. Every error names the key and, when it came from the text, the line.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Dict, Mapping, Optional

__all__ = ["RunConfig", "ConfigError", "parse_config", "serialize", "with_overrides", "validate", "FIELD_TYPES"]

SHAPES = ("gaussian", "bump")
DIRECTIONS = ("static", "outgoing", "ingoing")
BOUNDARIES = ("isolated", "sommerfeld")
SPIN_SYSTEMS = ("consistent", "literal")
# a Gaussian is below 1e-13 of its peak beyond this many widths
_SUPPORT_WIDTHS = 8.0


class ConfigError(ValueError):
    """Invalid configuration; ``key`` and ``line`` locate the problem."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"'{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line
        self.detail = message


@dataclass(frozen=True)
class RunConfig:
    # background
    mass: float = 1.0
    charge: float = 0.5
    # grid
    rstar_min: float = -200.0
    rstar_max: float = 200.0
    n_points: int = 2048
    n_theta: int = 32
    m: int = 0
    # mode
    ell: int = 2
    # initial data
    shape: str = "gaussian"
    center: float = 0.0
    width: float = 4.0
    amplitude: float = 1.0
    direction: str = "static"
    constraint_solved: bool = True
    scalar_amplitude: float = 0.0
    scalar_center: float = 0.0
    scalar_width: float = 4.0
    # gauge and Coulomb charges
    q_A: float = 0.0
    q_F: float = 0.0
    # multiplier
    epsilon: float = 1.0
    sigma: float = 1.0
    # stepping
    cfl: float = 0.25
    t_final: float = 100.0
    report_cadence: float = 1.0
    snapshot_cadence: int = 2
    boundary: str = "isolated"
    spin_system: str = "consistent"
    # outputs (empty: derived from the output directory)
    csv_path: str = ""
    json_path: str = ""

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_PY_TYPES = {"float": float, "int": int, "str": str, "bool": bool}


def _coerce(key: str, raw, line: Optional[int] = None):
    kind = _PY_TYPES[FIELD_TYPES[key]]
    if isinstance(raw, str):
        text = raw.strip()
        if kind is bool:
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ConfigError(f"expected a boolean, got {text!r}", key, line)
        if kind is int:
            try:
                return int(text)
            except ValueError:
                raise ConfigError(f"expected an integer, got {text!r}", key, line) from None
        if kind is float:
            try:
                val = float(text)
            except ValueError:
                raise ConfigError(f"expected a number, got {text!r}", key, line) from None
            if not math.isfinite(val):
                raise ConfigError("value must be finite", key, line)
            return val
        return text
    # already-typed values from overrides or JSON
    if kind is bool:
        if isinstance(raw, bool):
            return raw
        raise ConfigError(f"expected a boolean, got {raw!r}", key, line)
    if kind is int:
        if isinstance(raw, bool) or not float(raw).is_integer():
            raise ConfigError(f"expected an integer, got {raw!r}", key, line)
        return int(raw)
    if kind is float:
        if isinstance(raw, bool):
            raise ConfigError(f"expected a number, got {raw!r}", key, line)
        val = float(raw)
        if not math.isfinite(val):
            raise ConfigError("value must be finite", key, line)
        return val
    return str(raw)


def _strip_comment(text: str) -> str:
    for i, ch in enumerate(text):
        if ch == "#" and (i == 0 or text[i - 1].isspace()):
            return text[:i]
    return text


def validate(cfg: RunConfig, lines: Optional[Mapping[str, int]] = None) -> RunConfig:
    """Range checks; raises ConfigError naming the offending key."""
    lines = lines or {}

    def fail(key, msg):
        raise ConfigError(msg, key, lines.get(key))

    if not cfg.mass > 0:
        fail("mass", "must be positive")
    if not abs(cfg.charge) < cfg.mass:
        fail("charge", f"|Q| = {abs(cfg.charge)} must be below M = {cfg.mass}")
    if not cfg.rstar_max > cfg.rstar_min:
        fail("rstar_max", "must exceed rstar_min")
    if cfg.n_points < 16:
        fail("n_points", "must be at least 16")
    if cfg.n_theta < 8:
        fail("n_theta", "must be at least 8")
    if cfg.ell < 0:
        fail("ell", "must be non-negative")
    if abs(cfg.m) > cfg.ell:
        fail("m", f"|m| must not exceed ell = {cfg.ell}")
    for key, allowed in (("shape", SHAPES), ("direction", DIRECTIONS),
                         ("boundary", BOUNDARIES), ("spin_system", SPIN_SYSTEMS)):
        if getattr(cfg, key) not in allowed:
            fail(key, f"must be one of {', '.join(allowed)}")
    for key in ("width", "scalar_width", "epsilon", "report_cadence"):
        if not getattr(cfg, key) > 0:
            fail(key, "must be positive")
    if not 1.0 <= cfg.sigma <= 2.0:
        fail("sigma", "must lie in [1, 2]")
    if not 0 < cfg.cfl <= 1.0:
        fail("cfl", "must lie in (0, 1]")
    if cfg.t_final < 0:
        fail("t_final", "must be non-negative")
    n = round(cfg.t_final / cfg.report_cadence)
    if abs(n * cfg.report_cadence - cfg.t_final) > 1e-9 * max(1.0, cfg.t_final):
        fail("t_final", "must be a whole number of report_cadence intervals")
    if not 1 <= cfg.snapshot_cadence <= 4:
        fail("snapshot_cadence", "must be 1..4 steps")
    if cfg.m != 0 and cfg.scalar_amplitude != 0:
        fail("scalar_amplitude", "scalar coupling needs m = 0: the current of one azimuthal mode has azimuthal number 0")
    if cfg.m != 0 and cfg.q_F != 0:
        fail("q_F", "the Coulomb field is axisymmetric and needs m = 0")
    if cfg.boundary == "isolated":
        for key, c, w, a in (("center", cfg.center, cfg.width, cfg.amplitude),
                             ("scalar_center", cfg.scalar_center, cfg.scalar_width, cfg.scalar_amplitude)):
            if a == 0:
                continue
            reach = cfg.t_final + (_SUPPORT_WIDTHS * w if cfg.shape == "gaussian" else w)
            if c - reach < cfg.rstar_min or c + reach > cfg.rstar_max:
                fail(key, f"pulse reaches the isolated boundary before t_final: need "
                          f"[{c - reach:g}, {c + reach:g}] inside [{cfg.rstar_min:g}, {cfg.rstar_max:g}]")
    return cfg


def parse_config(text: str) -> RunConfig:
    """
    Parse and validate a flat key = value configuration.

    Raises
    ------
    ConfigError
        Unknown or repeated key, malformed line, type mismatch or range
        violation, with the line number.
    """
    values: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip_comment(raw).strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", None, lineno)
        key, _, val = body.partition("=")
        key = key.strip()
        if key not in FIELD_TYPES:
            raise ConfigError("unknown key", key, lineno)
        if key in values:
            raise ConfigError(f"repeated key (first on line {lines[key]})", key, lineno)
        values[key] = _coerce(key, val, lineno)
        lines[key] = lineno
    return validate(RunConfig(**values), lines)


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(cfg: RunConfig) -> str:
    """All keys, one per line, in a form parse_config reads back identically."""
    return "".join(f"{k} = {_render(v)}\n" for k, v in cfg.to_dict().items())


def with_overrides(cfg: RunConfig, overrides: Mapping[str, object]) -> RunConfig:
    """Replace keys (strings are coerced like file values) and revalidate."""
    clean = {}
    for key, val in overrides.items():
        if key not in FIELD_TYPES:
            raise ConfigError("unknown key", key)
        clean[key] = _coerce(key, val)
    return validate(replace(cfg, **clean))
