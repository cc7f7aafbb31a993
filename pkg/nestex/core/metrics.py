import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Set, Tuple

from nestex.core.corpus import Sentence, derive_pivots
from nestex.utils.errors import CorpusError

METRICS = ("TI", "TC", "AI", "AC", "PEI", "PEC")


def prf(tp: int, predicted: int, gold: int) -> Tuple[float, float, float]:
    p = tp / predicted if predicted else 0.0
    r = tp / gold if gold else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass
class MatchCounts:
    tp: int = 0
    predicted: int = 0
    gold: int = 0

    def add(self, pred: Set, gold: Set) -> None:
        self.tp += len(pred & gold)
        self.predicted += len(pred)
        self.gold += len(gold)


@dataclass
class MetricScore:
    tp: int
    predicted: int
    gold: int
    p: float
    r: float
    f1: float


@dataclass
class Report:
    scores: Dict[str, MetricScore] = field(default_factory=dict)
    by_type: Dict[str, MetricScore] = field(default_factory=dict)

    def f1(self, metric: str) -> float:
        return self.scores[metric].f1

    def mean_f1(self) -> float:
        return sum(self.scores[m].f1 for m in METRICS) / len(METRICS)


def _items(s: Sentence) -> Dict[str, Set[tuple]]:
    """Matchable tuples per metric; argument tuples key on the parent trigger (span and type) and the child span."""
    sid = s.id
    spans = s.mention_spans()
    triggers = s.trigger_by_id()
    out: Dict[str, Set[tuple]] = {m: set() for m in METRICS}
    for t in s.triggers:
        out["TI"].add((sid, t.span.start, t.span.end))
        out["TC"].add((sid, t.span.start, t.span.end, t.event_type))
    for link in s.arguments:
        parent = triggers.get(link.parent)
        child = spans.get(link.child)
        if parent is None or child is None:
            continue
        key = (sid, parent.span.start, parent.span.end, parent.event_type, child.start, child.end)
        out["AI"].add(key)
        out["AC"].add(key + (link.role,))
        if link.child in triggers:
            out["PEI"].add(key)
            out["PEC"].add(key + (link.role,))
    return out


def _align(gold: Sequence[Sentence], pred: Sequence[Sentence]) -> List[Tuple[Sentence, Sentence]]:
    pred_by_id = {s.id: s for s in pred}
    gold_ids = {s.id for s in gold}
    missing = [s.id for s in gold if s.id not in pred_by_id]
    extra = [sid for sid in pred_by_id if sid not in gold_ids]
    if missing or extra or len(pred_by_id) != len(pred):
        raise CorpusError(f"sentence ids do not align (missing {missing[:5]}, unexpected {extra[:5]})")
    return [(g, pred_by_id[g.id]) for g in gold]


def count_matches(gold: Sequence[Sentence], pred: Sequence[Sentence]) -> Dict[str, MatchCounts]:
    counts = {m: MatchCounts() for m in METRICS}
    for g, p in _align(gold, pred):
        gold_items, pred_items = _items(g), _items(p)
        for m in METRICS:
            counts[m].add(pred_items[m], gold_items[m])
    return counts


def _score(c: MatchCounts) -> MetricScore:
    return MetricScore(c.tp, c.predicted, c.gold, *prf(c.tp, c.predicted, c.gold))


def nested_subset(gold: Sequence[Sentence], pred: Sequence[Sentence]) -> Tuple[List[Sentence], List[Sentence]]:
    """Gold sentences holding at least one pivot element, with their predictions."""
    keep = {s.id for s in gold if derive_pivots(s)}
    return [s for s in gold if s.id in keep], [s for s in pred if s.id in keep]


def evaluate(gold: Sequence[Sentence], pred: Sequence[Sentence], by_type: bool = False,
             nested_only: bool = False) -> Report:
    """Micro-averaged P/R/F1 for trigger, argument and pivot-element metrics.

    With nested_only, only sentences whose gold annotation contains a nested event are scored.
    """
    _align(gold, pred)
    if nested_only:
        gold, pred = nested_subset(gold, pred)
    report = Report({m: _score(c) for m, c in count_matches(gold, pred).items()})
    if by_type:
        report.by_type = {label: _score(c) for label, c in sorted(type_counts(gold, pred).items())}
    return report


def type_counts(gold: Sequence[Sentence], pred: Sequence[Sentence]) -> Dict[str, MatchCounts]:
    """Trigger classification counts split by event type."""
    counts: Dict[str, MatchCounts] = {}
    for g, p in _align(gold, pred):
        gold_tc, pred_tc = _items(g)["TC"], _items(p)["TC"]
        for label in {item[-1] for item in gold_tc | pred_tc}:
            c = counts.setdefault(label, MatchCounts())
            c.add({i for i in pred_tc if i[-1] == label}, {i for i in gold_tc if i[-1] == label})
    return counts


def render_report(report: Report) -> str:
    rows: Iterable[Tuple[str, MetricScore]] = list(report.scores.items()) + list(report.by_type.items())
    width = max([8] + [len(name) + 2 for name, _ in rows])
    lines = [f"{'metric':<{width}}{'P':>8}{'R':>8}{'F1':>8}{'tp':>7}{'pred':>7}{'gold':>7}"]
    for name, s in rows:
        lines.append(f"{name:<{width}}{s.p:>8.4f}{s.r:>8.4f}{s.f1:>8.4f}{s.tp:>7d}{s.predicted:>7d}{s.gold:>7d}")
    return "\n".join(lines)


def report_to_json(report: Report) -> str:
    def dump(s: MetricScore) -> dict:
        return {"p": s.p, "r": s.r, "f1": s.f1, "tp": s.tp, "predicted": s.predicted, "gold": s.gold}
    data = {m: dump(s) for m, s in report.scores.items()}
    if report.by_type:
        data["by_type"] = {label: dump(s) for label, s in report.by_type.items()}
    return json.dumps(data, sort_keys=True)

