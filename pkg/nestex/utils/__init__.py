from .helpers import _clip, setup_logging, stable_hash, derive_rng
from .config import RunConfig, load_config, parse_config_text
from .errors import (
    NestexError,
    ConfigError,
    CorpusError,
    ParseError,
    ValidationError,
    ShapeError,
    CrfError,
    NumericError,
    CheckpointError,
)

__all__ = [
    '_clip', 'setup_logging', 'stable_hash', 'derive_rng',
    'RunConfig', 'load_config', 'parse_config_text',
    'NestexError', 'ConfigError', 'CorpusError', 'ParseError', 'ValidationError',
    'ShapeError', 'CrfError', 'NumericError', 'CheckpointError',
]
