"""Runtime configuration.

Settings come from a key-value file (one `key = value` per line, `#`
comments). The CLI resolves which file to read: an explicit --config flag
wins, then the SOPHIE_CONFIG environment variable, then built-in defaults.
Relative paths inside a config file are resolved against the file's
directory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

ENV_VAR = "SOPHIE_CONFIG"

_PACKAGE_DATA = Path(__file__).parent / "data"

DEFAULT_IDEAL_TRAJECTORY = (0.4, 0.4, 0.4, -0.2, -0.2, -0.2, -0.2, 0.5, 0.5, 0.5)


class ConfigError(ValueError):
    """A config file could not be read or contains an invalid entry."""


@dataclass(frozen=True)
class Config:
    port: int = 8000
    data_dir: Path = Path("data")
    content_dir: Path = _PACKAGE_DATA / "content"
    ui_dir: Path | None = None
    lexicon_sentiment: Path = _PACKAGE_DATA / "lexicons" / "sentiment.tsv"
    lexicon_empathy: Path = _PACKAGE_DATA / "lexicons" / "empathy.tsv"
    lexicon_hedges: Path = _PACKAGE_DATA / "lexicons" / "hedges.txt"
    lexicon_pronouns: Path = _PACKAGE_DATA / "lexicons" / "pronouns.txt"
    lecture_ms: int = 30000
    lecture_words: int = 75
    bin_count: int = 10
    ideal_trajectory: tuple = DEFAULT_IDEAL_TRAJECTORY
    session_idle_hours: float = 24.0


_PATH_KEYS = {
    "data_dir",
    "content_dir",
    "ui_dir",
    "lexicon_sentiment",
    "lexicon_empathy",
    "lexicon_hedges",
    "lexicon_pronouns",
}
_INT_KEYS = {"port", "lecture_ms", "lecture_words", "bin_count"}
_FLOAT_KEYS = {"session_idle_hours"}


def _parse_value(key: str, raw: str, base: Path, lineno: int):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key == "ideal_trajectory":
            values = tuple(float(part) for part in raw.split(","))
            if not values:
                raise ValueError("empty")
            return values
        if key in _PATH_KEYS:
            path = Path(raw)
            return path if path.is_absolute() else (base / path)
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value for {key!r}: {raw!r}") from None
    raise ConfigError(f"line {lineno}: unknown key {key!r}")


def _validate(cfg: Config) -> Config:
    if cfg.bin_count < 2:
        raise ConfigError("bin_count must be at least 2")
    if len(cfg.ideal_trajectory) != cfg.bin_count:
        raise ConfigError(
            f"ideal_trajectory has {len(cfg.ideal_trajectory)} bins, bin_count is {cfg.bin_count}"
        )
    for value in cfg.ideal_trajectory:
        if not -1.0 <= value <= 1.0:
            raise ConfigError(f"ideal_trajectory bin {value} outside [-1, 1]")
    if cfg.lecture_ms <= 0 or cfg.lecture_words <= 0:
        raise ConfigError("lecture thresholds must be positive")
    if cfg.session_idle_hours <= 0:
        raise ConfigError("session_idle_hours must be positive")
    return cfg


def load_config(path: str | os.PathLike | None = None) -> Config:
    """Build a Config from a file, or defaults when path is None."""
    if path is None:
        return _validate(Config())
    file_path = Path(path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {file_path}: {exc}") from None
    base = file_path.parent
    overrides: dict = {}
    valid_keys = {f.name for f in fields(Config)}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, raw_value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in valid_keys:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        overrides[key] = _parse_value(key, raw_value, base, lineno)
    return _validate(replace(Config(), **overrides))


def resolve_config(explicit_path: str | None = None) -> Config:
    """Apply the --config flag > SOPHIE_CONFIG > defaults precedence."""
    if explicit_path is not None:
        return load_config(explicit_path)
    env_path = os.environ.get(ENV_VAR)
    if env_path:
        return load_config(env_path)
    return load_config(None)
