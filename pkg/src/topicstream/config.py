"""Run configuration: a flat TOML-style key-value file plus command-line
overrides; overrides win. Every tunable re-validates its owning module's
constraints at load time and unknown keys are rejected.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

MODES = ("iedl", "idea_like", "olda")
OUTLIER_METHODS = ("boxplot", "mad")
FORMATS = ("jsonl", "csv", "stackexchange_xml")

# config-file key -> dataclass attribute (identity unless noted)
_KEY_TO_ATTR = {"lambda": "lambda_", "K": "k", "coherence_N": "coherence_n"}
_ATTR_TO_KEY = {v: k for k, v in _KEY_TO_ATTR.items()}


@dataclass
class RunConfig:
    """All pipeline tunables with their defaults."""

    input: str = ""
    input_format: str = "jsonl"
    outdir: str = "runs"
    stopwords: str = ""
    granularity: str = "month"
    date_start: str = ""
    date_end: str = ""
    k: int = 20
    alpha: float = 0.0  # 0 means "use 50/K"
    base_beta: float = 0.01
    epsilon_floor: float = 1e-8
    n_sweeps: int = 500
    burn_in: int = 300
    sample_lag: int = 20
    seed: int = 42
    window_w: int = 3
    lambda_: float = 0.5
    mode: str = "iedl"
    pmi_threshold: float = 1.0
    min_count: int = 5
    df_floor: int = 2
    top_n: int = 10
    top_m: int = 3
    coherence_n: int = 10
    eta: float = 0.1
    outlier_method: str = "boxplot"
    softmax_compat: bool = False

    @property
    def effective_alpha(self) -> float:
        return self.alpha if self.alpha > 0 else 50.0 / self.k

    def validate(self) -> "RunConfig":
        def fail(key, why):
            raise ConfigError(f"config key {key!r} {why}")

        if self.k < 2:
            fail("K", f"must be >= 2, got {self.k}")
        if self.alpha < 0:
            fail("alpha", "must be > 0 (or 0 for the 50/K default)")
        if self.base_beta <= 0:
            fail("base_beta", "must be > 0")
        if not 0 < self.epsilon_floor < self.base_beta:
            fail("epsilon_floor", "must satisfy 0 < epsilon_floor < base_beta")
        if self.burn_in < 0 or self.n_sweeps <= self.burn_in:
            fail("n_sweeps", f"must exceed burn_in >= 0, got {self.n_sweeps}/{self.burn_in}")
        if self.sample_lag < 1:
            fail("sample_lag", "must be >= 1")
        if self.window_w < 1:
            fail("window_w", f"must be >= 1, got {self.window_w}")
        if self.lambda_ < 0:
            fail("lambda", "must be >= 0")
        if self.mode not in MODES:
            fail("mode", f"must be one of {MODES}, got {self.mode!r}")
        if self.min_count < 1:
            fail("min_count", "must be >= 1")
        if self.df_floor < 1:
            fail("df_floor", "must be >= 1")
        if self.top_n < 1:
            fail("top_n", "must be >= 1")
        if self.top_m < 1:
            fail("top_m", "must be >= 1")
        if self.coherence_n < 2:
            fail("coherence_N", "must be >= 2")
        if self.eta < 0:
            fail("eta", "must be >= 0")
        if self.outlier_method not in OUTLIER_METHODS:
            fail("outlier_method", f"must be one of {OUTLIER_METHODS}")
        if self.input_format not in FORMATS:
            fail("input_format", f"must be one of {FORMATS}")
        if self.granularity != "month":
            fail("granularity", "only 'month' is supported")
        return self

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, value in raw.items():
            attr = _KEY_TO_ATTR.get(key, key)
            if attr not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[attr] = _coerce(key, value, getattr(cls, attr))
        return cls(**kwargs).validate()

    def to_text(self) -> str:
        """Canonical echo of the configuration, suitable for hashing and
        for reuse as a config file."""
        lines = []
        for f in fields(self):
            key = _ATTR_TO_KEY.get(f.name, f.name)
            lines.append(f"{key} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()

    def replace(self, **overrides) -> "RunConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(overrides)
        cfg = RunConfig(**values)
        return cfg.validate()


def _coerce(key: str, value, default):
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"config key {key!r} expects true/false")
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {key!r} expects an integer")
        if isinstance(value, float):
            if not value.is_integer():
                raise ConfigError(f"config key {key!r} expects an integer")
            value = int(value)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config key {key!r} expects a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"config key {key!r} expects a string")
        return value
    raise ConfigError(f"config key {key!r} has unsupported type")


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return repr(value)


def parse_value(text: str):
    """Parse one TOML-style scalar: quoted string, boolean, int, or float."""
    text = text.strip()
    if text.startswith('"'):
        if not text.endswith('"') or len(text) < 2:
            raise ConfigError(f"unterminated string: {text}")
        return text[1:-1].replace('\\"', '"').replace("\\\\", "\\")
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse value {text!r}; "
                          "quote strings in config files") from None


def parse_config_text(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"config line {lineno} is not 'key = value': {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in raw:
            raise ConfigError(f"duplicate config key {key!r} (line {lineno})")
        comment = _strip_trailing_comment(value)
        raw[key] = parse_value(comment)
    return raw


def _strip_trailing_comment(value: str) -> str:
    out = []
    in_string = False
    for ch in value:
        if ch == '"':
            in_string = not in_string
        if ch == "#" and not in_string:
            break
        out.append(ch)
    return "".join(out).strip()


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    raw = parse_config_text(Path(path).read_text("utf-8"))
    if overrides:
        raw.update(overrides)
    return RunConfig.from_dict(raw)


def parse_override(item: str) -> tuple[str, object]:
    """Parse one --set key=value override; unquoted non-numeric values are
    taken as bare strings for CLI convenience."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, _, value = item.partition("=")
    key = key.strip()
    value = value.strip()
    try:
        return key, parse_value(value)
    except ConfigError:
        return key, value
