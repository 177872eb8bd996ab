"""Run configuration: fields, validation, config-file parsing."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

MODES = ("mlc", "+plcp", "+clcp", "+both")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def normalize_mode(mode: str) -> str:
    m = mode.strip().lower()
    if m in ("plcp", "clcp", "both"):
        m = "+" + m
    if m not in MODES:
        raise ConfigError(f"unknown mode '{mode}'; expected one of {MODES}")
    return m


@dataclass
class RunConfig:
    """Everything a training or evaluation run needs, one key per field.

    Desk-scale defaults: a 2-layer, 4-head, 128-wide encoder trainable
    from scratch on a CPU in minutes.  `max_len` defaults to 128 for
    synthetic corpora; 320 is the right value for AAPD-sized documents.
    """

    layers: int = 2
    heads: int = 4
    hidden: int = 128
    max_len: int = 128
    batch_size: int = 32
    lr: float = 1e-3
    mode: str = "mlc"
    alpha: float | None = None
    gamma: float = 0.5
    plcp_pairs: int = 4
    threshold: float = 0.5
    seed: int = 0
    patience: int = 10
    eval_interval: int = 50
    max_steps: int = 5000
    min_freq: int = 1
    window: int = 10
    ca_filters: int = 64
    no_je: bool = False
    no_ca: bool = False
    detach_aux: bool = False
    symmetric_plcp: bool = False
    out_dir: str = "."
    train_path: str | None = None
    valid_path: str | None = None
    test_path: str | None = None

    def validate(self) -> "RunConfig":
        self.mode = normalize_mode(self.mode)
        if self.layers < 0:
            raise ConfigError("layers must be >= 0")
        if self.heads < 1 or self.hidden < 1:
            raise ConfigError("heads and hidden must be >= 1")
        if self.hidden % self.heads != 0:
            raise ConfigError(
                f"hidden={self.hidden} must be divisible by heads={self.heads}"
            )
        if self.max_len < 3:
            raise ConfigError("max_len must be >= 3")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.mode == "+both":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ConfigError("mode +both requires alpha in (0, 1)")
        if self.gamma <= 0:
            raise ConfigError("gamma must be positive")
        if self.plcp_pairs < 1:
            raise ConfigError("plcp_pairs must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError("threshold must lie in (0, 1)")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.eval_interval < 1:
            raise ConfigError("eval_interval must be >= 1")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if self.ca_filters < 1:
            raise ConfigError("ca_filters must be >= 1")
        if self.no_je and self.no_ca and self.mode != "mlc":
            raise ConfigError(
                "auxiliary modes need label representations; "
                "no_je together with no_ca supports mode mlc only"
            )
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> "RunConfig":
        """Build from a mapping; string values are coerced per field type."""
        known = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key '{key}'")
            kwargs[key] = _coerce(key, raw)
        return cls(**kwargs)


_BOOL_FIELDS = {"no_je", "no_ca", "detach_aux", "symmetric_plcp"}
_INT_FIELDS = {
    "layers", "heads", "hidden", "max_len", "batch_size", "plcp_pairs",
    "seed", "patience", "eval_interval", "max_steps", "min_freq", "window",
    "ca_filters",
}
_FLOAT_FIELDS = {"lr", "alpha", "gamma", "threshold"}
_OPTIONAL_FIELDS = {"alpha", "train_path", "valid_path", "test_path"}


def _coerce(key: str, raw):
    if raw is None:
        return None
    if isinstance(raw, str):
        text = raw.strip()
        if key in _OPTIONAL_FIELDS and text.lower() in ("", "none"):
            return None
        if key in _BOOL_FIELDS:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ConfigError(f"cannot parse boolean for '{key}': {raw!r}")
        if key in _INT_FIELDS:
            return int(text)
        if key in _FLOAT_FIELDS:
            return float(text)
        return text
    if key in _BOOL_FIELDS:
        return bool(raw)
    if key in _INT_FIELDS:
        return int(raw)
    if key in _FLOAT_FIELDS:
        return float(raw)
    return raw


def parse_config_file(path) -> dict[str, str]:
    """Read a plain-text `key = value` file; '#' starts a comment line."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = stripped.partition("=")
            values[key.strip()] = value.strip()
    return values


def write_config_file(path, config: RunConfig) -> None:
    lines = [f"{key} = {value}" for key, value in config.to_dict().items()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
