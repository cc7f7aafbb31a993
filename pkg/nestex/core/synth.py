import json
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from nestex.core.corpus import (
    ArgumentLink,
    EntityMention,
    LabelVocab,
    Sentence,
    Span,
    TriggerMention,
    derive_pivots,
)
from nestex.utils.errors import CorpusError

logger = logging.getLogger(__name__)

CONTENT = "Content"

# event types that can take another event as Content, with their trigger lexicons
NESTING_TYPES: Dict[str, Tuple[str, ...]] = {
    "Statement:Oral": ("say", "speak"),
    "Statement:Written": ("write", "report"),
    "Idea:Belief": ("believe", "think"),
    "Idea:Attitude": ("oppose", "agree"),
    "Idea:Doubt": ("wonder", "doubt"),
    "Knowledge:Aware": ("know", "aware"),
    "Knowledge:Perception": ("see", "hear"),
    "Knowledge:Inference": ("mean", "indicate"),
    "Sentiment:Preference": ("like", "hate"),
    "Sentiment:Emotion": ("worry", "fear"),
    "Instruction:Command": ("order", "instruct"),
    "Instruction:Demand": ("require", "ask"),
    "Judgement": ("accuse", "blame"),
    "Intention": ("plan", "want"),
}

# inner events: trigger lexicon, object role, object entity type
INNER_TYPES: Dict[str, Tuple[Tuple[str, ...], str, str]] = {
    "Transfer-ownership": (("pay", "buy", "sell"), "Target", "OBJ"),
    "Attack": (("attack", "bomb", "strike"), "Target", "LOC"),
    "Transport": (("travel", "move", "drive"), "Place", "LOC"),
    "Meet": (("meet", "visit", "call"), "Target", "PER"),
    "Elect": (("elect", "appoint", "hire"), "Target", "PER"),
}

ROLES = ("Agent", "Target", CONTENT, "Time", "Polarity", "Place")
ENTITY_TYPES = ("PER", "ORG", "LOC", "OBJ", "TIME", "POL")

_SYLLABLES = ("ka", "lo", "mi", "ra", "to", "ve", "su", "ni", "da", "pe", "zo", "ru", "fa", "gi", "he", "jo")
_ORG_NOUNS = ("army", "rebels", "company", "police", "union", "council", "bank", "ministry")
_OBJECTS = ("house", "car", "shares", "bill", "land", "weapons", "debt", "ticket")
_TIMES = (("yesterday",), ("today",), ("tomorrow",), ("on", "Monday"), ("last", "week"), ("next", "year"))
_POLARITY = ("not", "never", "maybe", "probably")
_CONNECTORS = ("to", "that")
_FILLER = (
    ("the", "weather", "was", "nice"),
    ("prices", "rose", "sharply", "again"),
    ("it", "is", "a", "quiet", "town"),
    ("the", "report", "was", "long", "and", "dull"),
    ("markets", "were", "calm", "this", "morning"),
)


@dataclass(frozen=True)
class SchemaSpec:
    nesting_types: Dict[str, Tuple[str, ...]] = field(default_factory=lambda: dict(NESTING_TYPES))
    inner_types: Dict[str, Tuple[Tuple[str, ...], str, str]] = field(default_factory=lambda: dict(INNER_TYPES))
    roles: Tuple[str, ...] = ROLES
    entity_types: Tuple[str, ...] = ENTITY_TYPES

    def __post_init__(self):
        for etype, lexicon in self.nesting_types.items():
            if not lexicon:
                raise ValueError(f"nesting type {etype} has no trigger lexeme")
        if CONTENT not in self.roles:
            raise ValueError("the schema needs a Content role to connect nested events")

    def vocab(self) -> LabelVocab:
        return LabelVocab(tuple(self.nesting_types) + tuple(self.inner_types), self.roles, self.entity_types)


@dataclass
class GenConfig:
    sentences: int = 100
    nested_fraction: float = 0.25
    distractor_fraction: float = 0.2
    polarity_fraction: float = 0.15
    time_fraction: float = 0.5
    max_depth: int = 2
    name_pool: int = 40
    seed: int = 0
    id_prefix: str = "syn"

    def __post_init__(self):
        for name in ("nested_fraction", "distractor_fraction", "polarity_fraction", "time_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.max_depth < 2:
            raise ValueError("max_depth counts event levels and must be >= 2")


def _pick(rng: np.random.Generator, options: Sequence):
    return options[int(rng.integers(len(options)))]


def _names(rng: np.random.Generator, count: int) -> List[str]:
    names: List[str] = []
    seen = set()
    while len(names) < count:
        word = "".join(_pick(rng, _SYLLABLES) for _ in range(int(rng.integers(2, 4)))).capitalize()
        if word not in seen:
            seen.add(word)
            names.append(word)
    return names


class _SentenceBuilder:
    def __init__(self, sid: str):
        self.sid = sid
        self.tokens: List[str] = []
        self.entities: List[EntityMention] = []
        self.triggers: List[TriggerMention] = []
        self.arguments: List[ArgumentLink] = []

    def word(self, *words: str) -> None:
        self.tokens.extend(words)

    def entity(self, words: Sequence[str], etype: str) -> str:
        eid = f"e{len(self.entities)}"
        start = len(self.tokens)
        self.tokens.extend(words)
        self.entities.append(EntityMention(eid, Span(start, len(self.tokens)), etype))
        return eid

    def trigger(self, word: str, etype: str) -> str:
        tid = f"t{len(self.triggers)}"
        start = len(self.tokens)
        self.tokens.append(word)
        self.triggers.append(TriggerMention(tid, Span(start, start + 1), etype))
        return tid

    def link(self, parent: str, child: str, role: str) -> None:
        self.arguments.append(ArgumentLink(parent, child, role))

    def build(self) -> Sentence:
        return Sentence(self.sid, tuple(self.tokens), tuple(self.entities), tuple(self.triggers), tuple(self.arguments))


class CorpusGenerator:
    def __init__(self, config: GenConfig, schema: Optional[SchemaSpec] = None):
        self.config = config
        self.schema = schema or SchemaSpec()
        self.rng = np.random.default_rng(config.seed)
        self.people = _names(self.rng, config.name_pool)
        self.places = _names(self.rng, config.name_pool)

    def _agent(self, b: _SentenceBuilder) -> str:
        if self.rng.random() < 0.3:
            return b.entity(("the", _pick(self.rng, _ORG_NOUNS)), "ORG")
        return b.entity((_pick(self.rng, self.people),), "PER")

    def _object(self, b: _SentenceBuilder, etype: str) -> str:
        if etype == "PER":
            return b.entity((_pick(self.rng, self.people),), "PER")
        if etype == "LOC":
            return b.entity((_pick(self.rng, self.places),), "LOC")
        return b.entity(("the", _pick(self.rng, _OBJECTS)), etype)

    def _inner_event(self, b: _SentenceBuilder, agent: str) -> str:
        etype = _pick(self.rng, list(self.schema.inner_types))
        lexicon, obj_role, obj_type = self.schema.inner_types[etype]
        tid = b.trigger(_pick(self.rng, lexicon), etype)
        b.link(tid, agent, "Agent")
        b.link(tid, self._object(b, obj_type), obj_role)
        if self.rng.random() < self.config.time_fraction:
            b.link(tid, b.entity(_pick(self.rng, _TIMES), "TIME"), "Time")
        return tid

    def _polarity(self, b: _SentenceBuilder) -> Optional[str]:
        if self.rng.random() < self.config.polarity_fraction:
            return b.entity((_pick(self.rng, _POLARITY),), "POL")
        return None

    def flat(self, sid: str) -> Sentence:
        b = _SentenceBuilder(sid)
        agent = self._agent(b)
        pol = self._polarity(b)
        tid = self._inner_event(b, agent)
        if pol:
            b.link(tid, pol, "Polarity")
        return b.build()

    def nested(self, sid: str, levels: int) -> Sentence:
        """AGENT [POL] OUTER (to | that AGENT) ... INNER OBJECT [TIME]; each outer takes the next as Content."""
        b = _SentenceBuilder(sid)
        agent = self._agent(b)
        pol = self._polarity(b)
        parent = None
        for level in range(levels - 1):
            etype = _pick(self.rng, list(self.schema.nesting_types))
            tid = b.trigger(_pick(self.rng, self.schema.nesting_types[etype]), etype)
            b.link(tid, agent, "Agent")
            if parent is None and pol:
                b.link(tid, pol, "Polarity")
            if parent is not None:
                b.link(parent, tid, CONTENT)
            parent = tid
            connector = _pick(self.rng, _CONNECTORS)
            b.word(connector)
            if connector == "that":
                agent = self._agent(b)
        inner = self._inner_event(b, agent)
        b.link(parent, inner, CONTENT)
        return b.build()

    def distractor(self, sid: str) -> Sentence:
        return Sentence(sid, tuple(_pick(self.rng, _FILLER)))

    def generate(self) -> List[Sentence]:
        cfg = self.config
        out = []
        for i in range(cfg.sentences):
            sid = f"{cfg.id_prefix}{i:05d}"
            if self.rng.random() < cfg.distractor_fraction:
                out.append(self.distractor(sid))
            elif self.rng.random() < cfg.nested_fraction:
                out.append(self.nested(sid, int(self.rng.integers(2, cfg.max_depth + 1))))
            else:
                out.append(self.flat(sid))
        logger.info("generated %d sentences (%d nested)", len(out), sum(1 for s in out if derive_pivots(s)))
        return out


def generate(config: GenConfig, schema: Optional[SchemaSpec] = None) -> List[Sentence]:
    return CorpusGenerator(config, schema).generate()


def nesting_stats(sentences: Sequence[Sentence]) -> Dict[str, object]:
    """Share of event sentences with nesting, and nested counts per outer event type."""
    with_events = [s for s in sentences if s.triggers]
    nested = [s for s in with_events if derive_pivots(s)]
    per_type: Counter = Counter()
    for s in nested:
        triggers = s.trigger_by_id()
        pivots = derive_pivots(s)
        outer = {link.parent for link in s.arguments if link.child in pivots}
        per_type.update(triggers[tid].event_type for tid in outer)
    return {
        "sentences": len(sentences),
        "event_sentences": len(with_events),
        "nested_sentences": len(nested),
        "nested_fraction": len(nested) / len(with_events) if with_events else 0.0,
        "outer_types": dict(sorted(per_type.items())),
    }


def write_schema(path: str, vocab: LabelVocab) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(vocab.to_dict(), indent=2) + "\n")


def load_schema(path: str) -> LabelVocab:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return LabelVocab.from_dict(json.load(f))
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise CorpusError(f"cannot read schema {path}: {e}") from None


def schema_sidecar(corpus_path: str) -> str:
    """`data/train.jsonl` -> `data/train.schema.json`."""
    return os.path.splitext(corpus_path)[0] + ".schema.json"
