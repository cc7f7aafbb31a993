import itertools
import math

import numpy as np
import pytest

from nestex.core.corpus import Span
from nestex.core.decoder import (
    ENTITY,
    NONE_ROLE,
    TRIGGER,
    BeamConfig,
    EventGraph,
    GraphEdge,
    GraphNode,
    NodeCandidate,
    decode,
    graph_score,
    top_k,
)

EVENT_TYPES = ("Attack", "Meet", "Say")
EDGE_LABELS = (NONE_ROLE, "Agent", "Content")


def _random_problem(rng):
    n_t = int(rng.integers(0, 3))
    n_e = int(rng.integers(0, 3))
    nodes = []
    for i in range(n_t):
        nodes.append(NodeCandidate(Span(2 * i, 2 * i + 1), TRIGGER, EVENT_TYPES, rng.normal(size=len(EVENT_TYPES))))
    for j in range(n_e):
        nodes.append(NodeCandidate(Span(2 * j + 1, 2 * j + 2), ENTITY))
    edges = {}
    for i in range(n_t):
        for j in range(len(nodes)):
            if i != j:
                edges[(i, j)] = rng.normal(size=len(EDGE_LABELS))
    return nodes, edges


def _brute_force(nodes, edges):
    """Best total score over every labeling; trigger pairs may not link both ways."""
    triggers = [i for i, n in enumerate(nodes) if n.kind == TRIGGER]
    pairs = sorted(edges)
    best = -math.inf
    for types in itertools.product(range(len(EVENT_TYPES)), repeat=len(triggers)):
        node_part = [nodes[i].scores[t] for i, t in zip(triggers, types)]
        for roles in itertools.product(range(len(EDGE_LABELS)), repeat=len(pairs)):
            chosen = dict(zip(pairs, roles))
            if any(chosen[(a, b)] and chosen.get((b, a)) for a, b in pairs):
                continue
            best = max(best, math.fsum(node_part + [edges[p][r] for p, r in chosen.items()]))
    return best


class TestDecode:
    def test_matches_exhaustive_search(self):
        rng = np.random.default_rng(99)
        exhaustive = BeamConfig(theta=10 ** 6, beta_t=len(EVENT_TYPES), beta_e=len(EDGE_LABELS))
        for _ in range(100):
            nodes, edges = _random_problem(rng)
            graph = decode(nodes, edges, exhaustive, EDGE_LABELS)
            expected = _brute_force(nodes, edges) if nodes else 0.0
            assert graph_score(graph) == expected

    def test_score_monotone_in_beam_width(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            nodes, edges = _random_problem(rng)
            scores = [graph_score(decode(nodes, edges, BeamConfig(theta, 2, 2), EDGE_LABELS)) for theta in range(1, 9)]
            assert all(b >= a for a, b in zip(scores, scores[1:]))

    def test_empty(self):
        assert decode([], {}, BeamConfig(), EDGE_LABELS) == EventGraph()

    def test_entities_only(self):
        nodes = [NodeCandidate(Span(0, 1), ENTITY), NodeCandidate(Span(2, 3), ENTITY)]
        graph = decode(nodes, {}, BeamConfig(), EDGE_LABELS)
        assert [n.kind for n in graph.nodes] == [ENTITY, ENTITY]
        assert graph.edges == () and graph_score(graph) == 0.0

    def test_every_node_is_kept(self):
        rng = np.random.default_rng(1)
        nodes, edges = _random_problem(rng)
        graph = decode(nodes, edges, BeamConfig(theta=1, beta_t=1, beta_e=1), EDGE_LABELS)
        assert sorted(n.ref for n in graph.nodes) == list(range(len(nodes)))

    def test_no_two_way_trigger_links(self):
        nodes = [NodeCandidate(Span(0, 1), TRIGGER, EVENT_TYPES, np.zeros(3)),
                 NodeCandidate(Span(1, 2), TRIGGER, EVENT_TYPES, np.zeros(3))]
        strong = np.log(np.array([0.01, 0.01, 0.98]))
        graph = decode(nodes, {(0, 1): strong, (1, 0): strong}, BeamConfig(1, 1, 1), EDGE_LABELS)
        assert [e.role for e in graph.edges] == ["Content"]
        assert [e.role for e in graph.null_edges] == [NONE_ROLE]

    def test_labels_must_include_none(self):
        nodes = [NodeCandidate(Span(0, 1), TRIGGER, EVENT_TYPES, np.zeros(3))]
        with pytest.raises(ValueError):
            decode(nodes, {}, BeamConfig(), ("Agent",))

    def test_bad_beam(self):
        with pytest.raises(ValueError):
            BeamConfig(theta=0)


class TestGraph:
    def test_reaches_follows_trigger_edges(self):
        g = EventGraph()
        for i in range(3):
            g = g.add_node(GraphNode(Span(i, i + 1), TRIGGER, "Say", 0.0, i))
        g = g.add_edge(GraphEdge(0, 1, "Content", 0.0)).add_edge(GraphEdge(1, 2, "Content", 0.0))
        assert g.reaches(0, 2)
        assert not g.reaches(2, 0)

    def test_none_edges_stored_apart_and_scored(self):
        g = EventGraph().add_node(GraphNode(Span(0, 1), TRIGGER, "Say", -0.5))
        g = g.add_edge(GraphEdge(0, 0, NONE_ROLE, -0.25))
        assert g.edges == () and len(g.null_edges) == 1
        assert graph_score(g) == -0.75


def test_top_k_stable():
    assert top_k(np.array([1.0, 3.0, 3.0, 0.0]), 2) == [1, 2]
