import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from nestex.core.corpus import LabelVocab, Sentence
from nestex.core.extractors import NestedEventModel, predict_corpus
from nestex.core.metrics import evaluate
from nestex.core.state import EpochRecord, TrainState
from nestex.nn.encoder import TokenVocab
from nestex.nn.nnkit import GradCheckReport, adam_step, grad_check
from nestex.utils.config import RunConfig
from nestex.utils.errors import CorpusError, NumericError
from nestex.utils.helpers import derive_rng

logger = logging.getLogger(__name__)


@dataclass
class TrainResult:
    model: NestedEventModel
    state: TrainState


def split_dev(sentences: Sequence[Sentence], fraction: float, seed: int) -> Tuple[List[Sentence], List[Sentence]]:
    if fraction <= 0.0 or len(sentences) < 2:
        return list(sentences), []
    order = derive_rng(seed, "dev-split").permutation(len(sentences))
    cut = max(1, int(round(len(sentences) * fraction)))
    dev_idx = set(int(i) for i in order[:cut])
    return ([s for i, s in enumerate(sentences) if i not in dev_idx],
            [s for i, s in enumerate(sentences) if i in dev_idx])


def train_epoch(model: NestedEventModel, sentences: Sequence[Sentence], shuffle_rng: np.random.Generator,
                dropout_rng: np.random.Generator) -> float:
    config = model.config
    total = 0.0
    for idx in shuffle_rng.permutation(len(sentences)):
        s = sentences[int(idx)]
        model.params.zero_grad()
        parts = model.joint_loss(s, train_mode=True, rng=dropout_rng)
        model.params.check_finite("gradients")
        adam_step(model.params, config.lr, config.weight_decay, config.clip_norm)
        total += parts.total
    return total / len(sentences)


def train(sentences: Sequence[Sentence], vocab: LabelVocab, config: RunConfig,
          dev: Optional[Sequence[Sentence]] = None, tokens: Optional[TokenVocab] = None,
          on_epoch: Optional[Callable[[EpochRecord], None]] = None) -> TrainResult:
    """Per-sentence Adam updates with seeded shuffling; restores the best-dev parameters at the end."""
    if not sentences:
        raise CorpusError("training corpus is empty")
    if dev is None:
        sentences, dev = split_dev(sentences, config.dev_fraction, config.seed)
    tokens = tokens or TokenVocab.build(sentences, config.hash_buckets)
    model = NestedEventModel(vocab, tokens, config)
    state = TrainState()
    shuffle_rng = derive_rng(config.seed, "shuffle")
    dropout_rng = derive_rng(config.seed, "dropout")
    logger.info("training on %d sentences, %d parameters", len(sentences), model.params.size())

    for epoch in range(1, config.epochs + 1):
        loss = train_epoch(model, sentences, shuffle_rng, dropout_rng)
        if not np.isfinite(loss):
            raise NumericError(f"epoch {epoch}: training loss is not finite")
        report = evaluate(dev, predict_corpus(model, dev, config.workers)) if dev else None
        record = EpochRecord(epoch, loss, report)
        improved = state.update_from_epoch(record, model.params)
        logger.info("epoch %s%s", record.log_line(), " *" if improved else "")
        if on_epoch:
            on_epoch(record)

    if state.best_snapshot is not None:
        model.params.restore(state.best_snapshot)
    return TrainResult(model, state)


def check_gradients(model: NestedEventModel, sentences: Sequence[Sentence], samples: int = 50,
                    seed: int = 0, eps: float = 1e-5, tol: float = 1e-4) -> Dict[str, GradCheckReport]:
    """Finite-difference check of the joint loss, `samples` coordinates per head (dropout off)."""
    def loss_fn(params) -> float:
        return sum(model.joint_loss(s, train_mode=False).total for s in sentences)

    heads: Dict[str, List[str]] = {}
    for name in model.params.names():
        heads.setdefault(name.split(".", 1)[0], []).append(name)
    reports = {}
    for head, names in sorted(heads.items()):
        reports[head] = grad_check(loss_fn, model.params, eps=eps, tol=tol, samples=samples,
                                   seed=seed, names=names)
        logger.info("gradcheck %s: %s", head, reports[head].summary())
    model.params.zero_grad()
    return reports
