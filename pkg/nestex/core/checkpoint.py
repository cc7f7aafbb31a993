import json
from typing import List, Optional

import numpy as np

from nestex.core.corpus import LabelVocab
from nestex.core.extractors import NestedEventModel
from nestex.nn.encoder import TokenVocab
from nestex.utils.config import RunConfig
from nestex.utils.errors import CheckpointError, ConfigError

MAGIC = "nestex-checkpoint"
VERSION = 1


def dumps_checkpoint(model: NestedEventModel) -> str:
    lines: List[str] = [
        f"{MAGIC} {VERSION}",
        "config " + json.dumps(model.config.to_dict(), sort_keys=True),
        "labels " + json.dumps(model.vocab.to_dict(), sort_keys=True),
        "tokens " + json.dumps(model.encoder.tokens.tokens, ensure_ascii=False),
    ]
    for name, value in model.params.items():
        lines.append(f"param {name} {','.join(str(d) for d in value.shape)}")
        lines.append(" ".join(f"{x:.17g}" for x in value.reshape(-1)))
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_checkpoint(model: NestedEventModel, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps_checkpoint(model))


def _header(line: str, key: str):
    prefix = key + " "
    if not line.startswith(prefix):
        raise CheckpointError(f"expected {key!r} line, got {line[:40]!r}")
    return json.loads(line[len(prefix):])


def load_checkpoint(path: str, expected_vocab: Optional[LabelVocab] = None) -> NestedEventModel:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from None
    if not lines or lines[0] != f"{MAGIC} {VERSION}":
        raise CheckpointError(f"{path} is not a version {VERSION} checkpoint")
    try:
        config = RunConfig(**_header(lines[1], "config"))
        vocab = LabelVocab.from_dict(_header(lines[2], "labels"))
        token_list = _header(lines[3], "tokens")
    except (IndexError, TypeError, ValueError, ConfigError) as e:
        raise CheckpointError(f"corrupt checkpoint header: {e}") from None
    if expected_vocab is not None and expected_vocab != vocab:
        raise CheckpointError("checkpoint label vocabulary does not match the corpus schema")

    model = NestedEventModel(vocab, TokenVocab(token_list, config.hash_buckets), config)
    seen = set()
    i = 4
    while i < len(lines) and lines[i] != "end":
        parts = lines[i].split(" ")
        if len(parts) != 3 or parts[0] != "param" or i + 1 >= len(lines):
            raise CheckpointError(f"malformed parameter header at line {i + 1}")
        name = parts[1]
        shape = tuple(int(d) for d in parts[2].split(",") if d)
        if name not in model.params:
            raise CheckpointError(f"unexpected parameter {name}")
        if model.params[name].shape != shape:
            raise CheckpointError(f"{name}: checkpoint shape {shape} != model shape {model.params[name].shape}")
        values = np.array([float(x) for x in lines[i + 1].split()], dtype=np.float64)
        if values.size != int(np.prod(shape)):
            raise CheckpointError(f"{name}: expected {int(np.prod(shape))} values, got {values.size}")
        model.params.values[name][...] = values.reshape(shape)
        seen.add(name)
        i += 2
    missing = set(model.params.names()) - seen
    if missing:
        raise CheckpointError(f"checkpoint lacks parameters {sorted(missing)}")
    return model
