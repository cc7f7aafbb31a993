from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from nestex.core.corpus import LabelVocab, Sentence
from nestex.nn.nnkit import MLP, MlpCache, ModelParams, mlp_backward, mlp_forward
from nestex.utils.errors import ShapeError
from nestex.utils.helpers import stable_hash

EMBED = "enc.embed"
PROMPT = "enc.prompt"


class TokenVocab:
    """Known tokens map to their rank; unknown tokens share hashed buckets after them."""

    def __init__(self, tokens: Sequence[str], buckets: int = 64):
        if buckets < 1:
            raise ValueError("need at least one hash bucket")
        self.tokens: List[str] = list(tokens)
        self.buckets = buckets
        self._index: Dict[str, int] = {t: i for i, t in enumerate(self.tokens)}

    @classmethod
    def build(cls, sentences: Iterable[Sentence], buckets: int = 64, min_count: int = 1) -> "TokenVocab":
        counts = Counter(tok for s in sentences for tok in s.tokens)
        ranked = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
        return cls(ranked, buckets)

    def __len__(self) -> int:
        return len(self.tokens) + self.buckets

    def row(self, token: str) -> int:
        idx = self._index.get(token)
        if idx is not None:
            return idx
        return len(self.tokens) + stable_hash(token) % self.buckets

    def rows(self, tokens: Sequence[str]) -> np.ndarray:
        return np.array([self.row(t) for t in tokens], dtype=np.int64)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for tok in self.tokens:
                f.write(tok + "\n")

    @classmethod
    def load(cls, path: str, buckets: int = 64) -> "TokenVocab":
        with open(path, "r", encoding="utf-8") as f:
            return cls([line.rstrip("\n") for line in f if line.rstrip("\n")], buckets)


@dataclass
class EncoderConfig:
    embed_dim: int = 32
    window: int = 2
    repr_dim: int = 64
    hidden_dim: int = 64
    layers: int = 2
    dropout: float = 0.4
    hash_buckets: int = 64
    use_prompt: bool = True

    def __post_init__(self):
        if self.embed_dim < 1 or self.repr_dim < 1 or self.window < 0:
            raise ShapeError("embed_dim and repr_dim must be positive, window non-negative")

    @property
    def input_dim(self) -> int:
        # window embeddings + parity + prompt slot; the prompt slot stays zero when prompts are off
        return (2 * self.window + 1) * self.embed_dim + 1 + self.embed_dim


@dataclass
class EncoderCache:
    rows: np.ndarray
    mlp: MlpCache
    prompt_used: bool


class SentenceEncoder:
    def __init__(self, config: EncoderConfig, tokens: TokenVocab, labels: LabelVocab):
        self.config = config
        self.tokens = tokens
        self.labels = labels
        self.mlp = MLP("enc.ffn", config.input_dim, config.hidden_dim, config.repr_dim,
                       layers=config.layers, dropout=config.dropout)

    @property
    def prompt_count(self) -> int:
        return len(self.labels.event_types) + len(self.labels.roles)

    def init_params(self, params: ModelParams) -> None:
        params.add(EMBED, (len(self.tokens), self.config.embed_dim), init="normal", scale=0.5)
        self.mlp.init_params(params)
        if self.config.use_prompt:
            params.add(PROMPT, (self.prompt_count, self.config.embed_dim), init="normal", scale=0.5)

    def features(self, tokens: Sequence[str], params: ModelParams) -> Tuple[np.ndarray, np.ndarray]:
        cfg = self.config
        n = len(tokens)
        rows = self.tokens.rows(tokens)
        table = params[EMBED]
        w, d = cfg.window, cfg.embed_dim
        x = np.zeros((n, cfg.input_dim))
        for offset in range(-w, w + 1):
            col = (offset + w) * d
            lo, hi = max(0, -offset), min(n, n - offset)
            if lo < hi:
                x[lo:hi, col:col + d] = table[rows[lo + offset:hi + offset]]
        x[:, (2 * w + 1) * d] = np.arange(n) % 2
        if cfg.use_prompt:
            x[:, (2 * w + 1) * d + 1:] = prompt_summary(self.labels, params)[None, :]
        return x, rows

    def encode(self, tokens: Sequence[str], params: ModelParams, train_mode: bool = False,
               rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, EncoderCache]:
        if len(tokens) < 1:
            raise ShapeError("cannot encode an empty sentence")
        x, rows = self.features(tokens, params)
        h, mlp_cache = mlp_forward(self.mlp, params, x, train_mode, rng)
        return h, EncoderCache(rows, mlp_cache, self.config.use_prompt)

    def backward(self, cache: EncoderCache, dH: np.ndarray, params: ModelParams) -> None:
        cfg = self.config
        dx = mlp_backward(self.mlp, params, cache.mlp, dH)
        n = dx.shape[0]
        w, d = cfg.window, cfg.embed_dim
        d_embed = params.grads[EMBED]
        for offset in range(-w, w + 1):
            col = (offset + w) * d
            lo, hi = max(0, -offset), min(n, n - offset)
            if lo < hi:
                np.add.at(d_embed, cache.rows[lo + offset:hi + offset], dx[lo:hi, col:col + d])
        if cache.prompt_used:
            d_summary = dx[:, (2 * w + 1) * d + 1:].sum(axis=0)
            params.grads[PROMPT] += d_summary[None, :] / self.prompt_count


def encode_sentence(tokens: Sequence[str], encoder: SentenceEncoder, params: ModelParams) -> np.ndarray:
    """Inference-mode representations H (n x repr_dim)."""
    return encoder.encode(tokens, params)[0]


def prompt_summary(vocab: LabelVocab, params: ModelParams) -> np.ndarray:
    """Mean of the label prompt embeddings, event types first, then roles."""
    count = len(vocab.event_types) + len(vocab.roles)
    if count == 0:
        raise ShapeError("prompt summary needs at least one label")
    table = params[PROMPT]
    if table.shape[0] != count:
        raise ShapeError(f"prompt table has {table.shape[0]} rows for {count} labels")
    return table.mean(axis=0)
