import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from nestex.core.corpus import (
    ENTITY_LABEL,
    ArgumentLink,
    EntityMention,
    LabelVocab,
    Sentence,
    Span,
    TriggerMention,
    bio_decode,
    bio_encode,
)
from nestex.core.decoder import ENTITY, NONE_ROLE, TRIGGER, BeamConfig, EventGraph, NodeCandidate, decode
from nestex.nn.crf import CrfLayer, TagSet, nll_and_grads, viterbi
from nestex.nn.encoder import EncoderConfig, SentenceEncoder, TokenVocab
from nestex.nn.nnkit import (
    MLP,
    MlpCache,
    ModelParams,
    log_softmax,
    mlp_backward,
    mlp_forward,
    softmax_cross_entropy_rows,
)
from nestex.utils.config import RunConfig
from nestex.utils.errors import ConfigError, CorpusError, NumericError

logger = logging.getLogger(__name__)


def span_reps(H: np.ndarray, spans: Sequence[Span]) -> np.ndarray:
    """Mean of token representations per span, shape (len(spans), d)."""
    out = np.zeros((len(spans), H.shape[1]))
    for i, span in enumerate(spans):
        out[i] = H[span.start:span.end].mean(axis=0)
    return out


def span_reps_backward(d_reps: np.ndarray, spans: Sequence[Span], dH: np.ndarray) -> None:
    for i, span in enumerate(spans):
        dH[span.start:span.end] += d_reps[i] / len(span)


@dataclass
class PairScores:
    """Logits over (NONE,) + roles for each ordered (left, right) index pair."""
    pairs: List[Tuple[int, int]]
    logits: np.ndarray
    inputs: Optional[np.ndarray] = None
    cache: Optional[MlpCache] = None

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass
class LossBreakdown:
    trigger: float = 0.0
    trigger_type: float = 0.0
    entity: float = 0.0
    argument: float = 0.0
    pivot: float = 0.0

    @property
    def total(self) -> float:
        return self.trigger + self.trigger_type + self.entity + self.argument + self.pivot


@dataclass
class Prediction:
    sentence: Sentence
    graph: EventGraph
    trigger_spans: List[Tuple[Span, str]] = field(default_factory=list)
    entity_spans: List[Tuple[Span, str]] = field(default_factory=list)


class NestedEventModel:
    """Encoder, trigger/entity taggers, type scorer and the two pair classifiers."""

    def __init__(self, vocab: LabelVocab, tokens: TokenVocab, config: RunConfig):
        if config.entity_typed and not vocab.entity_types:
            raise ConfigError("entity_typed=true needs entity types in the label vocabulary")
        self.vocab = vocab
        self.config = config
        self.pair_labels: Tuple[str, ...] = (NONE_ROLE,) + vocab.roles
        self.trigger_tags = TagSet.from_labels(vocab.event_types)
        self.entity_tags = TagSet.from_labels(vocab.entity_types if config.entity_typed else (ENTITY_LABEL,))

        d, hidden, layers, dropout = config.repr_dim, config.hidden_dim, config.fnn_layers, config.dropout
        self.encoder = SentenceEncoder(
            EncoderConfig(config.embed_dim, config.window, d, hidden, layers, dropout,
                          config.hash_buckets, config.use_prompt),
            tokens, vocab)
        self.trigger_ffn = MLP("trig.ffn", d, hidden, len(self.trigger_tags), layers, dropout)
        self.trigger_crf = CrfLayer.for_tagset("trig.crf", self.trigger_tags)
        self.type_ffn = MLP("type.ffn", d, hidden, len(vocab.event_types), layers, dropout)
        self.entity_ffn = MLP("ent.ffn", d, hidden, len(self.entity_tags), layers, dropout)
        self.entity_crf = CrfLayer.for_tagset("ent.crf", self.entity_tags)
        self.te_ffn = MLP("te.ffn", 2 * d, hidden, len(self.pair_labels), layers, dropout)
        # without the pivot head, trigger pairs go through the trigger-entity classifier
        self.tt_ffn = None if config.ablate_per else MLP("tt.ffn", 2 * d, hidden, len(self.pair_labels), layers, dropout)

        self.params = ModelParams(config.seed)
        self.encoder.init_params(self.params)
        for mlp in (self.trigger_ffn, self.type_ffn, self.entity_ffn, self.te_ffn):
            mlp.init_params(self.params)
        self.trigger_crf.init_params(self.params)
        self.entity_crf.init_params(self.params)
        if self.tt_ffn is not None:
            self.tt_ffn.init_params(self.params)

    @property
    def pivot_ffn(self) -> MLP:
        return self.tt_ffn if self.tt_ffn is not None else self.te_ffn

    # ========== Heads ==========
    def trigger_emissions(self, H, train_mode=False, rng=None):
        return mlp_forward(self.trigger_ffn, self.params, H, train_mode, rng)

    def entity_emissions(self, H, train_mode=False, rng=None):
        return mlp_forward(self.entity_ffn, self.params, H, train_mode, rng)

    def tag_triggers(self, H: np.ndarray) -> List[Tuple[Span, str]]:
        """Constrained Viterbi over typed trigger BIO tags."""
        F, _ = self.trigger_emissions(H)
        path, _ = viterbi(F, self.trigger_crf, self.params[self.trigger_crf.param_name])
        return bio_decode(self.trigger_tags.decode(path))

    def tag_entities(self, H: np.ndarray) -> List[Tuple[Span, str]]:
        """Entity spans with their tag label (ENT unless entity types are tagged)."""
        F, _ = self.entity_emissions(H)
        path, _ = viterbi(F, self.entity_crf, self.params[self.entity_crf.param_name])
        return bio_decode(self.entity_tags.decode(path))

    def score_trigger_types(self, trigger_reps: np.ndarray) -> np.ndarray:
        """Logits over event types, one row per trigger span."""
        return mlp_forward(self.type_ffn, self.params, trigger_reps)[0]

    def _score_pairs(self, mlp: MLP, left: np.ndarray, right: np.ndarray, pairs: List[Tuple[int, int]],
                     train_mode: bool, rng) -> PairScores:
        if not pairs:
            return PairScores([], np.zeros((0, len(self.pair_labels))))
        x = np.concatenate([left[[i for i, _ in pairs]], right[[j for _, j in pairs]]], axis=1)
        logits, cache = mlp_forward(mlp, self.params, x, train_mode, rng)
        return PairScores(pairs, logits, x, cache)

    def _pairs_backward(self, mlp: MLP, scores: PairScores, d_logits: np.ndarray,
                        d_left: np.ndarray, d_right: np.ndarray) -> None:
        if not scores.pairs:
            return
        dx = mlp_backward(mlp, self.params, scores.cache, d_logits)
        d = d_left.shape[1]
        for row, (i, j) in enumerate(scores.pairs):
            d_left[i] += dx[row, :d]
            d_right[j] += dx[row, d:]

    def score_trigger_entity_pairs(self, trigger_reps: np.ndarray, entity_reps: np.ndarray,
                                   train_mode=False, rng=None) -> PairScores:
        pairs = [(i, j) for i in range(len(trigger_reps)) for j in range(len(entity_reps))]
        return self._score_pairs(self.te_ffn, trigger_reps, entity_reps, pairs, train_mode, rng)

    def score_trigger_trigger_pairs(self, trigger_reps: np.ndarray, train_mode=False, rng=None) -> PairScores:
        """Ordered (outer, inner) pairs; a role label means inner is an argument of outer."""
        m = len(trigger_reps)
        pairs = [(i, j) for i in range(m) for j in range(m) if i != j]
        return self._score_pairs(self.pivot_ffn, trigger_reps, trigger_reps, pairs, train_mode, rng)

    # ========== Training objective ==========
    def _gold_entity_tags(self, s: Sentence) -> List[str]:
        if not self.config.entity_typed:
            return bio_encode([(e.span, ENTITY_LABEL) for e in s.entities], len(s))
        missing = [e.id for e in s.entities if e.entity_type is None]
        if missing:
            raise CorpusError(f"sentence {s.id}: entities {missing} lack a type in typed mode")
        return bio_encode([(e.span, e.entity_type) for e in s.entities], len(s))

    def joint_loss(self, s: Sentence, train_mode: bool = True,
                   rng: Optional[np.random.Generator] = None) -> LossBreakdown:
        """Trigger CRF + type + entity CRF + argument + pivot losses on gold spans; accumulates gradients."""
        params = self.params
        parts = LossBreakdown()
        H, enc_cache = self.encoder.encode(s.tokens, params, train_mode, rng)
        dH = np.zeros_like(H)

        F, cache = self.trigger_emissions(H, train_mode, rng)
        gold = self.trigger_tags.encode(bio_encode([(t.span, t.event_type) for t in s.triggers], len(s)))
        parts.trigger, dF, dA = nll_and_grads(F, self.trigger_crf, params[self.trigger_crf.param_name], gold)
        params.grads[self.trigger_crf.param_name] += dA
        dH += mlp_backward(self.trigger_ffn, params, cache, dF)

        F, cache = self.entity_emissions(H, train_mode, rng)
        gold = self.entity_tags.encode(self._gold_entity_tags(s))
        parts.entity, dF, dA = nll_and_grads(F, self.entity_crf, params[self.entity_crf.param_name], gold)
        params.grads[self.entity_crf.param_name] += dA
        dH += mlp_backward(self.entity_ffn, params, cache, dF)

        t_spans = [t.span for t in s.triggers]
        e_spans = [e.span for e in s.entities]
        T = span_reps(H, t_spans)
        E = span_reps(H, e_spans)
        dT = np.zeros_like(T)
        dE = np.zeros_like(E)

        if t_spans:
            logits, cache = mlp_forward(self.type_ffn, params, T, train_mode, rng)
            golds = [self.vocab.event_index(t.event_type) for t in s.triggers]
            parts.trigger_type, d_logits = softmax_cross_entropy_rows(logits, golds)
            dT += mlp_backward(self.type_ffn, params, cache, d_logits)

        roles = {(a.parent, a.child): self.pair_labels.index(a.role) for a in s.arguments}
        t_ids = [t.id for t in s.triggers]
        e_ids = [e.id for e in s.entities]

        te = self.score_trigger_entity_pairs(T, E, train_mode, rng)
        if len(te):
            golds = [roles.get((t_ids[i], e_ids[j]), 0) for i, j in te.pairs]
            parts.argument, d_logits = softmax_cross_entropy_rows(te.logits, golds)
            self._pairs_backward(self.te_ffn, te, d_logits, dT, dE)

        tt = self.score_trigger_trigger_pairs(T, train_mode, rng)
        if len(tt):
            golds = [roles.get((t_ids[i], t_ids[j]), 0) for i, j in tt.pairs]
            parts.pivot, d_logits = softmax_cross_entropy_rows(tt.logits, golds)
            self._pairs_backward(self.pivot_ffn, tt, d_logits, dT, dT)

        span_reps_backward(dT, t_spans, dH)
        span_reps_backward(dE, e_spans, dH)
        self.encoder.backward(enc_cache, dH, params)
        if not np.isfinite(parts.total):
            raise NumericError(f"non-finite loss on sentence {s.id}")
        return parts

    # ========== Inference ==========
    def beam_config(self) -> BeamConfig:
        return BeamConfig(self.config.beam_theta, self.config.beta_t, self.config.beta_e)

    def predict(self, tokens: Sequence[str], sentence_id: str) -> Prediction:
        H, _ = self.encoder.encode(tokens, self.params)
        triggers = self.tag_triggers(H)
        entities = self.tag_entities(H)
        t_spans = [span for span, _ in triggers]
        e_spans = [span for span, _ in entities]
        T = span_reps(H, t_spans)
        E = span_reps(H, e_spans)

        nodes: List[NodeCandidate] = []
        if t_spans:
            type_scores = log_softmax(self.score_trigger_types(T), axis=1)
            for span, row in zip(t_spans, type_scores):
                nodes.append(NodeCandidate(span, TRIGGER, self.vocab.event_types, row))
        for span, label in entities:
            nodes.append(NodeCandidate(span, ENTITY, (label,) if self.config.entity_typed else ()))

        n_t = len(t_spans)
        edge_scores: Dict[Tuple[int, int], np.ndarray] = {}
        te = self.score_trigger_entity_pairs(T, E)
        for (i, j), row in zip(te.pairs, log_softmax(te.logits, axis=1)):
            edge_scores[(i, n_t + j)] = row
        tt = self.score_trigger_trigger_pairs(T)
        for (i, j), row in zip(tt.pairs, log_softmax(tt.logits, axis=1)):
            edge_scores[(i, j)] = row

        graph = decode(nodes, edge_scores, self.beam_config(), self.pair_labels)
        return Prediction(self._graph_to_sentence(sentence_id, tokens, graph), graph, triggers, entities)

    def _graph_to_sentence(self, sid: str, tokens: Sequence[str], graph: EventGraph) -> Sentence:
        ids: Dict[int, str] = {}
        triggers, entities = [], []
        for pos, node in enumerate(graph.nodes):
            if node.kind == TRIGGER:
                ids[pos] = f"t{len(triggers)}"
                triggers.append(TriggerMention(ids[pos], node.span, node.label))
            else:
                ids[pos] = f"e{len(entities)}"
                entities.append(EntityMention(ids[pos], node.span, node.label))
        arguments = [ArgumentLink(ids[e.src], ids[e.dst], e.role) for e in graph.edges]
        return Sentence(sid, tuple(tokens), tuple(entities), tuple(triggers), tuple(arguments))


def predict_corpus(model: NestedEventModel, sentences: Sequence[Sentence], workers: int = 1) -> List[Sentence]:
    """Predictions in input order; decoding runs on `workers` threads with frozen parameters."""
    def run(s: Sentence) -> Sentence:
        return model.predict(s.tokens, s.id).sentence

    if workers <= 1 or len(sentences) < 2:
        return [run(s) for s in sentences]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, sentences))
