import dataclasses
import json
from typing import Dict, List, Tuple

import numpy as np
import pytest

from nestex.core.corpus import ArgumentLink, EntityMention, LabelVocab, Sentence, Span, TriggerMention
from nestex.core.metrics import METRICS, evaluate, prf, render_report, report_to_json
from nestex.core.synth import GenConfig, SchemaSpec, generate
from nestex.utils.errors import CorpusError

from tests.conftest import make_nested_sentence


def _with_arguments(s: Sentence, *arguments) -> Sentence:
    return dataclasses.replace(s, arguments=tuple(arguments))


def _f1s(report):
    return {m: report.f1(m) for m in METRICS}


class TestHandCountedFixtures:
    """Gold has 2 triggers, 5 arguments and 1 pivot (t1 as Content of t0)."""

    def test_self_evaluation(self, nested_sentence):
        report = evaluate([nested_sentence], [nested_sentence])
        assert _f1s(report) == {m: 1.0 for m in METRICS}
        assert report.mean_f1() == 1.0

    def test_missing_regular_argument(self, nested_sentence):
        pred = _with_arguments(nested_sentence, *nested_sentence.arguments[:4])
        report = evaluate([nested_sentence], [pred])
        ai = report.scores["AI"]
        assert (ai.tp, ai.predicted, ai.gold) == (4, 4, 5)
        assert ai.p == 1.0 and ai.r == 0.8
        assert ai.f1 == pytest.approx(8 / 9)
        assert report.f1("PEI") == 1.0 and report.f1("PEC") == 1.0

    def test_wrong_role_counts_for_identification_only(self, nested_sentence):
        args = list(nested_sentence.arguments)
        args[3] = ArgumentLink("t1", "e2", "Place")
        report = evaluate([nested_sentence], [_with_arguments(nested_sentence, *args)])
        assert report.f1("AI") == 1.0
        assert report.f1("AC") == pytest.approx(0.8)

    def test_wrong_pivot_role(self, nested_sentence):
        args = list(nested_sentence.arguments)
        args[1] = ArgumentLink("t0", "t1", "Agent")
        report = evaluate([nested_sentence], [_with_arguments(nested_sentence, *args)])
        assert report.f1("PEI") == 1.0
        assert report.f1("PEC") == 0.0
        assert report.f1("AC") == pytest.approx(0.8)

    def test_wrong_inner_type(self, nested_sentence):
        triggers = (nested_sentence.triggers[0], TriggerMention("t1", nested_sentence.triggers[1].span, "Attack"))
        report = evaluate([nested_sentence], [dataclasses.replace(nested_sentence, triggers=triggers)])
        assert report.f1("TI") == 1.0
        assert report.f1("TC") == 0.5
        # the three arguments of t1 are keyed by the wrong event type
        assert report.scores["AI"].tp == 2
        assert report.f1("AI") == pytest.approx(0.4)
        assert report.f1("PEI") == 1.0

    def test_empty_prediction(self, nested_sentence):
        pred = Sentence(nested_sentence.id, nested_sentence.tokens)
        report = evaluate([nested_sentence], [pred])
        assert _f1s(report) == {m: 0.0 for m in METRICS}
        assert report.scores["PEI"].gold == 1


def test_prf_zero_denominators():
    assert prf(0, 0, 0) == (0.0, 0.0, 0.0)
    assert prf(1, 2, 4) == (0.5, 0.25, pytest.approx(1 / 3))


def test_misaligned_ids(nested_sentence):
    with pytest.raises(CorpusError):
        evaluate([nested_sentence], [make_nested_sentence("other")])


def test_by_type(nested_sentence):
    triggers = (nested_sentence.triggers[0], TriggerMention("t1", nested_sentence.triggers[1].span, "Attack"))
    report = evaluate([nested_sentence], [dataclasses.replace(nested_sentence, triggers=triggers)], by_type=True)
    assert report.by_type["Statement:Oral"].f1 == 1.0
    assert report.by_type["Attack"].predicted == 1 and report.by_type["Attack"].tp == 0
    assert report.by_type["Transfer-ownership"].gold == 1


def test_render_and_json(nested_sentence):
    report = evaluate([nested_sentence], [nested_sentence], by_type=True)
    table = render_report(report)
    assert table.splitlines()[0].split() == ["metric", "P", "R", "F1", "tp", "pred", "gold"]
    assert "Transfer-ownership" in table
    data = json.loads(report_to_json(report))
    assert data["PEC"]["f1"] == 1.0
    assert data["by_type"]["Statement:Oral"]["tp"] == 1


def _shared_child_sentence() -> Sentence:
    """Two Attack triggers that both take e0 as an argument."""
    return Sentence(
        id="x",
        tokens=("Ann", "hit", "back", "and", "hit", "again"),
        entities=(EntityMention("e0", Span(0, 1), "PER"),),
        triggers=(TriggerMention("t0", Span(1, 2), "Attack"), TriggerMention("t1", Span(4, 5), "Attack")),
        arguments=(ArgumentLink("t0", "e0", "Agent"), ArgumentLink("t1", "e0", "Target")),
    )


class TestArgumentKeys:
    def test_same_type_parents_stay_distinct(self):
        s = _shared_child_sentence()
        report = evaluate([s], [s])
        assert report.scores["AI"].gold == 2
        assert report.scores["AC"].tp == report.scores["AI"].tp == 2

    def test_dropping_one_shared_argument_costs_recall(self):
        s = _shared_child_sentence()
        report = evaluate([s], [_with_arguments(s, s.arguments[1])])
        assert report.scores["AI"].r == 0.5
        assert report.scores["AC"].r == 0.5

    def test_argument_of_moved_parent_is_not_matched(self):
        s = _shared_child_sentence()
        moved = dataclasses.replace(s, triggers=(TriggerMention("t0", Span(2, 3), "Attack"), s.triggers[1]))
        assert evaluate([s], [moved]).scores["AI"].tp == 1

    def test_stacked_nesting_counts_every_link(self):
        for s in generate(GenConfig(sentences=200, nested_fraction=1.0, distractor_fraction=0.0, max_depth=3,
                                    seed=11)):
            report = evaluate([s], [s])
            assert report.scores["AI"].gold == len(s.arguments), s.id


class TestNestedOnly:
    def test_flat_sentences_are_dropped(self, nested_sentence):
        flat = dataclasses.replace(make_nested_sentence("flat"), arguments=nested_sentence.arguments[2:])
        empty = Sentence("flat", flat.tokens)
        report = evaluate([nested_sentence, flat], [nested_sentence, empty], nested_only=True)
        assert _f1s(report) == {m: 1.0 for m in METRICS}
        assert report.scores["TI"].gold == 2
        assert evaluate([nested_sentence, flat], [nested_sentence, empty]).f1("TI") < 1.0

    def test_ids_still_checked(self, nested_sentence):
        with pytest.raises(CorpusError):
            evaluate([nested_sentence], [make_nested_sentence("other")], nested_only=True)


# ========== randomized corpora ==========
def _perturb(s: Sentence, rng: np.random.Generator, vocab: LabelVocab) -> Sentence:
    triggers = tuple(
        TriggerMention(t.id, t.span, vocab.event_types[rng.integers(len(vocab.event_types))])
        if rng.random() < 0.2 else t
        for t in s.triggers
    )
    arguments = []
    for link in s.arguments:
        roll = rng.random()
        if roll < 0.15:
            continue
        if roll < 0.3:
            link = ArgumentLink(link.parent, link.child, vocab.roles[rng.integers(len(vocab.roles))])
        arguments.append(link)
    ids = [m.id for m in s.triggers] + [m.id for m in s.entities]
    for t in s.triggers:
        if ids and rng.random() < 0.2:
            child = ids[rng.integers(len(ids))]
            if child != t.id and all((a.parent, a.child) != (t.id, child) for a in arguments):
                arguments.append(ArgumentLink(t.id, child, vocab.roles[rng.integers(len(vocab.roles))]))
    return dataclasses.replace(s, triggers=triggers, arguments=tuple(arguments))


def _oracle_counts(gold: List[Sentence], pred: List[Sentence]) -> Dict[str, Tuple[int, int, int]]:
    """Naive matcher: list every item as a plain tuple, dedupe, and intersect by linear search."""
    def listing(sentences):
        rows = {m: [] for m in METRICS}
        for s in sentences:
            for t in s.triggers:
                rows["TI"].append((s.id, t.span.start, t.span.end))
                rows["TC"].append((s.id, t.span.start, t.span.end, t.event_type))
            for a in s.arguments:
                parents = [t for t in s.triggers if t.id == a.parent]
                children = [m.span for m in s.triggers + s.entities if m.id == a.child]
                if not parents or not children:
                    continue
                p, c = parents[0], children[0]
                ident = (s.id, p.span.start, p.span.end, p.event_type, c.start, c.end)
                rows["AI"].append(ident)
                rows["AC"].append(ident + (a.role,))
                if any(t.id == a.child for t in s.triggers):
                    rows["PEI"].append(ident)
                    rows["PEC"].append(ident + (a.role,))
        return {m: list(dict.fromkeys(v)) for m, v in rows.items()}

    g, p = listing(gold), listing(pred)
    return {m: (sum(1 for item in p[m] if item in g[m]), len(p[m]), len(g[m])) for m in METRICS}


@pytest.fixture(scope="module")
def random_corpora():
    vocab = SchemaSpec().vocab()
    rng = np.random.default_rng(21)
    out = []
    for seed in range(10):
        gold = generate(GenConfig(sentences=40, nested_fraction=0.6, max_depth=3, seed=seed))
        out.append((gold, [_perturb(s, rng, vocab) for s in gold]))
    return out


class TestRandomCorpora:
    def test_counts_match_naive_oracle(self, random_corpora):
        for gold, pred in random_corpora:
            report = evaluate(gold, pred)
            expected = _oracle_counts(gold, pred)
            for m in METRICS:
                s = report.scores[m]
                assert (s.tp, s.predicted, s.gold) == expected[m], m

    def test_classification_never_exceeds_identification(self, random_corpora):
        for gold, pred in random_corpora:
            scores = evaluate(gold, pred).scores
            assert scores["TC"].tp <= scores["TI"].tp
            assert scores["AC"].tp <= scores["AI"].tp
            assert scores["PEC"].tp <= scores["PEI"].tp

    def test_sentence_order_does_not_matter(self, random_corpora):
        rng = np.random.default_rng(4)
        for gold, pred in random_corpora:
            base = report_to_json(evaluate(gold, pred, by_type=True))
            shuffled_gold = [gold[i] for i in rng.permutation(len(gold))]
            shuffled_pred = [pred[i] for i in rng.permutation(len(pred))]
            assert report_to_json(evaluate(shuffled_gold, shuffled_pred, by_type=True)) == base
