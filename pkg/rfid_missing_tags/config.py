"""
Configuration management.

Experiment settings come from three places, highest priority first:
1. CLI flags
2. a flat key=value config file
3. built-in defaults

Sweep axes accept comma lists (1000,5000,10000) and inclusive
start:stop:step ranges (0.1:0.9:0.1).
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .channel import ChannelConfig
from .core import MAX_STRING_BITS

PROTOCOLS = ("ssmti", "ismti", "edfsa")
SWEEP_AXES = ("n", "missing_rate", "w", "p_override", "detect_err", "capture")
DEFAULT_TRIALS = 500


class ConfigError(ValueError):
    """Raised for an unusable experiment configuration."""


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """
    One experiment, or a sweep when any axis holds a tuple of values.

    Axes: n, missing_rate, w, p_override, detect_err, capture.
    """
    protocol: str = "ssmti"
    n: int | tuple[int, ...] = 10_000
    missing_rate: float | tuple[float, ...] = 0.1
    w: int | tuple[int, ...] = 96
    p_override: float | None | tuple[float, ...] = None
    detect_err: float | tuple[float, ...] = 0.0
    capture: float | tuple[float, ...] = 0.0
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0
    output: str | None = None
    workers: int = 1
    q_prior: float = 0.5
    missing_rate_oracle: bool = False

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(
                f"unknown protocol {self.protocol!r} (expected one of {', '.join(PROTOCOLS)})"
            )
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if not 0.0 <= self.q_prior <= 1.0:
            raise ConfigError(f"q_prior must lie in [0, 1], got {self.q_prior}")
        for n in self.axis("n"):
            if n < 1:
                raise ConfigError(f"n must be >= 1, got {n}")
        for w in self.axis("w"):
            if not 1 <= w <= MAX_STRING_BITS:
                raise ConfigError(f"w must lie in [1, {MAX_STRING_BITS}], got {w}")
        for p in self.axis("p_override"):
            if p is not None and p <= 0:
                raise ConfigError(f"p_override must be > 0, got {p}")
        for name in ("missing_rate", "detect_err", "capture"):
            for value in self.axis(name):
                if not 0.0 <= value <= 1.0:
                    raise ConfigError(f"{name} must lie in [0, 1], got {value}")

    def axis(self, name: str) -> tuple:
        value = getattr(self, name)
        return tuple(value) if isinstance(value, (tuple, list)) else (value,)

    @property
    def is_ranged(self) -> bool:
        return any(isinstance(getattr(self, name), (tuple, list)) for name in SWEEP_AXES)

    def cells(self) -> Iterator[ExperimentConfig]:
        """Every single-valued configuration in the Cartesian product of the axes."""
        for combo in itertools.product(*(self.axis(name) for name in SWEEP_AXES)):
            yield replace(self, **dict(zip(SWEEP_AXES, combo)))

    def channel(self, rng_seed: int = 0) -> ChannelConfig:
        if self.is_ranged:
            raise ConfigError("a ranged configuration has no single channel")
        return ChannelConfig(
            detection_error_prob=self.detect_err,
            capture_prob=self.capture,
            rng_seed=rng_seed,
        )


# ---------------------------------------------------------------------------
# key=value files
# ---------------------------------------------------------------------------

CONFIG_KEYS = tuple(f.name for f in fields(ExperimentConfig))


def load_config(path: str | Path) -> dict[str, str]:
    """Read raw key=value pairs. Blank lines and '#' comments are ignored."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")

    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path.name}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path.name}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def parse_range(text: str, kind: type = float) -> tuple:
    """
    Parse an axis value: "a,b,c" or an inclusive "start:stop:step".

    A single value gives a one-element tuple.
    """
    text = text.strip()
    if not text:
        raise ConfigError("empty range")
    try:
        if ":" in text:
            parts = [kind(part) for part in text.split(":")]
            if len(parts) != 3:
                raise ConfigError(f"range {text!r} must be start:stop:step")
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ConfigError(f"range {text!r} is empty")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = tuple(kind(start + i * step) for i in range(count))
            if kind is float:
                values = tuple(round(v, 9) for v in values)
            return values
        values = tuple(kind(part) for part in text.split(",") if part.strip())
        if not values:
            raise ConfigError(f"range {text!r} is empty")
        return values
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"cannot parse {text!r} as {kind.__name__} values") from e


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse {text!r} as a boolean")


def _parse_scalar(key: str, text: str):
    try:
        if key in ("trials", "master_seed", "workers"):
            return int(text)
        if key == "q_prior":
            return float(text)
    except ValueError as e:
        raise ConfigError(f"cannot parse {key}={text!r}") from e
    if key == "missing_rate_oracle":
        return _parse_bool(text)
    return text


def _parse_value(key: str, text: str):
    """Turn a raw string into the ExperimentConfig field value."""
    if key in SWEEP_AXES:
        kind = int if key in ("n", "w") else float
        if key == "p_override" and text.strip().lower() in ("", "none", "opt"):
            return None
        values = parse_range(text, kind)
        return values[0] if len(values) == 1 else values
    return _parse_scalar(key, text)


def resolve_experiment_config(
    cli_overrides: Mapping[str, object],
    path: str | Path | None = None,
) -> ExperimentConfig:
    """
    Build an ExperimentConfig from CLI values, the config file and defaults.

    CLI values that are None count as "not given". String CLI values are
    parsed like file values.
    """
    file_values = load_config(path) if path else {}
    settings: dict[str, object] = {}

    for key in CONFIG_KEYS:
        cli_value = cli_overrides.get(key)
        if cli_value is not None:
            settings[key] = _parse_value(key, cli_value) if isinstance(cli_value, str) else cli_value
        elif key in file_values:
            settings[key] = _parse_value(key, file_values[key])
            print(f"[config] {key} = {file_values[key]} (from {Path(path).name})")

    return ExperimentConfig(**settings)
