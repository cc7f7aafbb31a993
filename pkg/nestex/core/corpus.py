import json
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Set, Tuple

from nestex.utils.errors import CorpusError, ParseError, ValidationError

logger = logging.getLogger(__name__)

OUTSIDE = "O"
ENTITY_LABEL = "ENT"

TagSequence = List[str]


# ========== Data model ==========
@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class TriggerMention:
    id: str
    span: Span
    event_type: str


@dataclass(frozen=True)
class EntityMention:
    id: str
    span: Span
    entity_type: Optional[str] = None


@dataclass(frozen=True)
class ArgumentLink:
    parent: str
    child: str
    role: str


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: Tuple[str, ...]
    entities: Tuple[EntityMention, ...] = ()
    triggers: Tuple[TriggerMention, ...] = ()
    arguments: Tuple[ArgumentLink, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    def mention_spans(self) -> Dict[str, Span]:
        spans = {m.id: m.span for m in self.entities}
        spans.update({t.id: t.span for t in self.triggers})
        return spans

    def trigger_by_id(self) -> Dict[str, TriggerMention]:
        return {t.id: t for t in self.triggers}


@dataclass(frozen=True)
class LabelVocab:
    event_types: Tuple[str, ...]
    roles: Tuple[str, ...]
    entity_types: Tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("event_types", "roles", "entity_types"):
            labels = getattr(self, name)
            object.__setattr__(self, name, tuple(labels))
            if len(set(labels)) != len(labels):
                raise CorpusError(f"duplicate labels in {name}")

    def event_index(self, label: str) -> int:
        return self.event_types.index(label)

    def role_index(self, label: str) -> int:
        return self.roles.index(label)

    def to_dict(self) -> Dict[str, List[str]]:
        return {"event_types": list(self.event_types), "roles": list(self.roles),
                "entity_types": list(self.entity_types)}

    @classmethod
    def from_dict(cls, data: dict) -> "LabelVocab":
        return cls(tuple(data["event_types"]), tuple(data["roles"]), tuple(data.get("entity_types", ())))

    @classmethod
    def infer(cls, sentences: Iterable["Sentence"]) -> "LabelVocab":
        """Sorted labels seen in `sentences`; used when no schema file is given."""
        sentences = list(sentences)
        return cls(
            tuple(sorted({t.event_type for s in sentences for t in s.triggers})),
            tuple(sorted({a.role for s in sentences for a in s.arguments})),
            tuple(sorted({e.entity_type for s in sentences for e in s.entities if e.entity_type is not None})),
        )


# ========== Validation ==========
def sentence_problems(s: Sentence, vocab: LabelVocab) -> List[ValidationError]:
    """Every rule violation in `s`, in a stable order."""
    problems: List[ValidationError] = []
    n = len(s.tokens)
    if n == 0:
        problems.append(ValidationError(s.id, "tokens", "sentence has no tokens"))
    seen: Set[str] = set()
    for kind, mentions in (("entities", s.entities), ("triggers", s.triggers)):
        for m in mentions:
            if m.id in seen:
                problems.append(ValidationError(s.id, kind, f"duplicate mention id {m.id!r}"))
            seen.add(m.id)
            if m.span.end > n:
                problems.append(ValidationError(
                    s.id, kind, f"span [{m.span.start}, {m.span.end}) of {m.id!r} out of range for {n} tokens"))
    for t in s.triggers:
        if t.event_type not in vocab.event_types:
            problems.append(ValidationError(s.id, "triggers", f"unknown event type {t.event_type!r} on {t.id!r}"))
    for e in s.entities:
        if e.entity_type is not None and vocab.entity_types and e.entity_type not in vocab.entity_types:
            problems.append(ValidationError(s.id, "entities", f"unknown entity type {e.entity_type!r} on {e.id!r}"))
    problems.extend(_overlap_problems(s, "triggers", s.triggers))
    problems.extend(_overlap_problems(s, "entities", s.entities))

    trigger_ids = {t.id for t in s.triggers}
    pairs: Set[Tuple[str, str]] = set()
    for link in s.arguments:
        if link.parent not in seen:
            problems.append(ValidationError(s.id, "arguments", f"dangling parent id {link.parent!r}"))
        elif link.parent not in trigger_ids:
            problems.append(ValidationError(s.id, "arguments", f"parent {link.parent!r} is not a trigger"))
        if link.child not in seen:
            problems.append(ValidationError(s.id, "arguments", f"dangling child id {link.child!r}"))
        if link.child == link.parent:
            problems.append(ValidationError(s.id, "arguments", f"self-link on {link.parent!r}"))
        if link.role not in vocab.roles:
            problems.append(ValidationError(s.id, "arguments", f"unknown role {link.role!r}"))
        if (link.parent, link.child) in pairs:
            problems.append(ValidationError(
                s.id, "arguments", f"duplicate link {link.parent!r} -> {link.child!r}"))
        pairs.add((link.parent, link.child))
    return problems


def _overlap_problems(s: Sentence, kind: str, mentions) -> List[ValidationError]:
    out = []
    ordered = sorted(mentions, key=lambda m: (m.span.start, m.span.end))
    for a, b in zip(ordered, ordered[1:]):
        if a.span.overlaps(b.span):
            out.append(ValidationError(s.id, kind, f"{a.id!r} overlaps {b.id!r}"))
    return out


def validate_sentence(s: Sentence, vocab: LabelVocab) -> Sentence:
    problems = sentence_problems(s, vocab)
    if problems:
        raise problems[0]
    for t in s.triggers:
        for e in s.entities:
            if t.span.overlaps(e.span):
                logger.warning("sentence %s: trigger %s overlaps entity %s", s.id, t.id, e.id)
    return s


def derive_pivots(s: Sentence) -> Set[str]:
    """Triggers that are themselves an argument of another event."""
    trigger_ids = {t.id for t in s.triggers}
    return {link.child for link in s.arguments if link.child in trigger_ids}


# ========== BIO ==========
def bio_encode(spans: Iterable[Tuple[Span, str]], n: int, strict: bool = True) -> TagSequence:
    tags = [OUTSIDE] * n
    for span, label in sorted(spans, key=lambda item: (item[0].start, item[0].end)):
        if span.end > n:
            raise CorpusError(f"span [{span.start}, {span.end}) out of range for {n} tokens")
        if any(tags[j] != OUTSIDE for j in range(span.start, span.end)):
            if strict:
                raise CorpusError(f"overlapping span [{span.start}, {span.end}) {label}")
            logger.warning("dropping overlapping span [%d, %d) %s", span.start, span.end, label)
            continue
        tags[span.start] = f"B-{label}"
        for j in range(span.start + 1, span.end):
            tags[j] = f"I-{label}"
    return tags


def split_tag(tag: str) -> Tuple[str, Optional[str]]:
    if tag == OUTSIDE:
        return OUTSIDE, None
    prefix, _, label = tag.partition("-")
    if prefix not in ("B", "I") or not label:
        raise CorpusError(f"malformed BIO tag {tag!r}")
    return prefix, label


def bio_decode(tags: TagSequence, strict: bool = False) -> List[Tuple[Span, str]]:
    spans: List[Tuple[Span, str]] = []
    start, label = None, None

    def close(end):
        if start is not None:
            spans.append((Span(start, end), label))

    for i, tag in enumerate(tags):
        prefix, tag_label = split_tag(tag)
        if prefix == "I" and start is not None and tag_label == label:
            continue
        close(i)
        start, label = None, None
        if prefix == "B":
            start, label = i, tag_label
        elif prefix == "I":
            if strict:
                raise CorpusError(f"orphan {tag} at position {i}")
            start, label = i, tag_label
    close(len(tags))
    return spans


# ========== JSONL ==========
def sentence_to_record(s: Sentence) -> dict:
    entities = []
    for e in s.entities:
        item = {"id": e.id, "start": e.span.start, "end": e.span.end}
        if e.entity_type is not None:
            item["type"] = e.entity_type
        entities.append(item)
    return {
        "id": s.id,
        "tokens": list(s.tokens),
        "entities": entities,
        "triggers": [{"id": t.id, "start": t.span.start, "end": t.span.end, "type": t.event_type}
                     for t in s.triggers],
        "arguments": [{"parent": a.parent, "child": a.child, "role": a.role} for a in s.arguments],
    }


def _span(sid: str, kind: str, item: dict) -> Span:
    try:
        start, end = int(item["start"]), int(item["end"])
    except (KeyError, TypeError, ValueError):
        raise ValidationError(sid, kind, f"mention {item.get('id')!r} lacks integer start/end") from None
    if not 0 <= start < end:
        raise ValidationError(sid, kind, f"span [{start}, {end}) of {item.get('id')!r} is empty or negative")
    return Span(start, end)


def record_to_sentence(record: dict) -> Sentence:
    sid = str(record.get("id", "?"))
    for key in ("id", "tokens", "entities", "triggers", "arguments"):
        if key not in record:
            raise ValidationError(sid, key, "missing key")
    try:
        return Sentence(
            id=sid,
            tokens=tuple(str(t) for t in record["tokens"]),
            entities=tuple(EntityMention(str(e["id"]), _span(sid, "entities", e), e.get("type"))
                           for e in record["entities"]),
            triggers=tuple(TriggerMention(str(t["id"]), _span(sid, "triggers", t), str(t["type"]))
                           for t in record["triggers"]),
            arguments=tuple(ArgumentLink(str(a["parent"]), str(a["child"]), str(a["role"]))
                            for a in record["arguments"]),
        )
    except (KeyError, TypeError) as e:
        raise ValidationError(sid, "record", f"malformed mention: {e}") from None


def _iter_records(path: str):
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(line_no, str(e)) from None
            if not isinstance(record, dict):
                raise ParseError(line_no, "record is not a JSON object")
            yield line_no, record


def read_jsonl(path: str) -> List[Sentence]:
    """Sentences without label checks (structure only)."""
    return [record_to_sentence(record) for _, record in _iter_records(path)]


def parse_jsonl(path: str, vocab: LabelVocab) -> List[Sentence]:
    return [validate_sentence(record_to_sentence(record), vocab) for _, record in _iter_records(path)]


def check_jsonl(path: str, vocab: LabelVocab) -> List[str]:
    """Checks every line and returns all problems instead of stopping at the first."""
    problems: List[str] = []
    try:
        for line_no, record in _iter_records(path):
            try:
                s = record_to_sentence(record)
            except CorpusError as e:
                problems.append(f"line {line_no}: {e}")
                continue
            problems.extend(f"line {line_no}: {p}" for p in sentence_problems(s, vocab))
    except ParseError as e:
        problems.append(str(e))
    return problems


def dumps_sentence(s: Sentence) -> str:
    return json.dumps(sentence_to_record(s), ensure_ascii=False)


def write_jsonl(sentences: Iterable[Sentence], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s in sentences:
            f.write(dumps_sentence(s) + "\n")
