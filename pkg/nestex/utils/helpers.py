import hashlib
import logging
import os
from typing import Optional

import numpy as np

_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _clip(s, n=4000):
    return s if len(s) <= n else s[:n] + "\n...[truncated]"


def setup_logging(verbosity: int = 0, level: Optional[str] = None) -> None:
    """Configures the root logger once; NESTEX_LOG_LEVEL wins over verbosity."""
    name = level or os.getenv("NESTEX_LOG_LEVEL")
    if name:
        resolved = logging.getLevelName(name.upper())
        if not isinstance(resolved, int):
            resolved = logging.WARNING
    else:
        resolved = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(level=resolved, format=_LOG_FORMAT)
    root.setLevel(resolved)


def stable_hash(text: str) -> int:
    # process-independent, unlike hash()
    return int.from_bytes(hashlib.md5(text.encode("utf-8")).digest()[:8], "little")


def derive_rng(seed: int, name: str) -> np.random.Generator:
    """Generator keyed by (seed, name) so draws do not depend on creation order."""
    return np.random.default_rng([seed, stable_hash(name) & 0xFFFFFFFF])
