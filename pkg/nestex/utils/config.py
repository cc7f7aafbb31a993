import dataclasses
import os
from dataclasses import dataclass, fields
from typing import Dict, Optional

from nestex.utils.errors import ConfigError

_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


@dataclass
class RunConfig:
    # published defaults: fnn_layers, dropout, lr, weight_decay, epochs, beam_theta, beta_t, beta_e
    embed_dim: int = 32
    window: int = 2
    hidden_dim: int = 64
    repr_dim: int = 64
    fnn_layers: int = 2
    dropout: float = 0.4
    lr: float = 1e-3
    weight_decay: float = 1e-5
    epochs: int = 100
    beam_theta: int = 20
    beta_t: int = 2
    beta_e: int = 2
    seed: int = 13
    use_prompt: bool = True
    ablate_per: bool = False
    entity_typed: bool = False
    hash_buckets: int = 64
    clip_norm: float = 0.0
    workers: int = 1
    gradcheck_samples: int = 50
    dev_fraction: float = 0.0

    def __post_init__(self):
        if self.fnn_layers < 1:
            raise ConfigError("fnn_layers must be >= 1")
        if self.window < 0:
            raise ConfigError("window must be >= 0")
        for name in ("embed_dim", "hidden_dim", "repr_dim", "beam_theta", "beta_t", "beta_e", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if not 0.0 <= self.dev_fraction < 1.0:
            raise ConfigError("dev_fraction must be in [0, 1)")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, object]:
        return dataclasses.asdict(self)

    def to_text(self) -> str:
        return "\n".join(f"{k}={_format_value(v)}" for k, v in self.to_dict().items()) + "\n"


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def _coerce(key: str, raw: str, kind):
    raw = raw.strip()
    if kind is bool:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {raw!r}") from None


def parse_config_text(text: str, base: Optional[RunConfig] = None) -> RunConfig:
    """Parses flat key=value text on top of `base` (defaults when omitted)."""
    kinds = {f.name: f.type for f in fields(RunConfig)}
    values = (base or RunConfig()).to_dict()
    for line_no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {line_no}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in kinds:
            raise ConfigError(f"config line {line_no}: unknown key {key!r}")
        values[key] = _coerce(key, raw, kinds[key])
    return RunConfig(**values)


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, str]] = None) -> RunConfig:
    config = RunConfig()
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                config = parse_config_text(f.read())
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
    env_workers = os.getenv("NESTEX_WORKERS")
    if env_workers:
        config = parse_config_text(f"workers={env_workers}", config)
    if overrides:
        config = parse_config_text("\n".join(f"{k}={v}" for k, v in overrides.items()), config)
    return config
