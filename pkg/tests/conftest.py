import pytest

from nestex.core.corpus import ArgumentLink, EntityMention, Sentence, Span, TriggerMention
from nestex.core.synth import GenConfig, SchemaSpec, generate
from nestex.utils.config import RunConfig


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end training runs (deselect with -m 'not slow')")


def make_nested_sentence(sid: str = "s1") -> Sentence:
    """`Mary said that John paid the bill yesterday`: the payment is the Content of the statement."""
    return Sentence(
        id=sid,
        tokens=("Mary", "said", "that", "John", "paid", "the", "bill", "yesterday"),
        entities=(
            EntityMention("e0", Span(0, 1), "PER"),
            EntityMention("e1", Span(3, 4), "PER"),
            EntityMention("e2", Span(5, 7), "OBJ"),
            EntityMention("e3", Span(7, 8), "TIME"),
        ),
        triggers=(
            TriggerMention("t0", Span(1, 2), "Statement:Oral"),
            TriggerMention("t1", Span(4, 5), "Transfer-ownership"),
        ),
        arguments=(
            ArgumentLink("t0", "e0", "Agent"),
            ArgumentLink("t0", "t1", "Content"),
            ArgumentLink("t1", "e1", "Agent"),
            ArgumentLink("t1", "e2", "Target"),
            ArgumentLink("t1", "e3", "Time"),
        ),
    )


@pytest.fixture
def nested_sentence() -> Sentence:
    return make_nested_sentence()


@pytest.fixture
def vocab():
    return SchemaSpec().vocab()


@pytest.fixture
def tiny_config() -> RunConfig:
    return RunConfig(embed_dim=6, window=1, hidden_dim=8, repr_dim=7, dropout=0.0, epochs=2, seed=3,
                     hash_buckets=4)


@pytest.fixture
def small_corpus():
    return generate(GenConfig(sentences=12, nested_fraction=0.5, seed=5))
