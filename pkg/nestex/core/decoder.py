import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from nestex.core.corpus import Span

logger = logging.getLogger(__name__)

NONE_ROLE = "NONE"
TRIGGER = "trigger"
ENTITY = "entity"


# ========== Graph ==========
@dataclass(frozen=True)
class GraphNode:
    span: Span
    kind: str
    label: Optional[str]
    score: float
    ref: int = -1  # position in the caller's candidate list


@dataclass(frozen=True)
class GraphEdge:
    src: int
    dst: int
    role: str
    score: float


@dataclass(frozen=True)
class EventGraph:
    """Typed nodes plus role-labeled edges; `null_edges` keeps pairs decided as NONE with their score."""
    nodes: Tuple[GraphNode, ...] = ()
    edges: Tuple[GraphEdge, ...] = ()
    null_edges: Tuple[GraphEdge, ...] = ()

    def add_node(self, node: GraphNode) -> "EventGraph":
        return replace(self, nodes=self.nodes + (node,))

    def add_edge(self, edge: GraphEdge) -> "EventGraph":
        if edge.role == NONE_ROLE:
            return replace(self, null_edges=self.null_edges + (edge,))
        return replace(self, edges=self.edges + (edge,))

    def reaches(self, src: int, dst: int) -> bool:
        """True when a directed trigger path src -> ... -> dst already exists."""
        children: Dict[int, List[int]] = {}
        for e in self.edges:
            if self.nodes[e.dst].kind == TRIGGER:
                children.setdefault(e.src, []).append(e.dst)
        stack, seen = [src], set()
        while stack:
            cur = stack.pop()
            if cur == dst:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(children.get(cur, ()))
        return False


def graph_score(g: EventGraph) -> float:
    """Sum of node and edge scores (NONE decisions included), exactly rounded."""
    return math.fsum([n.score for n in g.nodes] + [e.score for e in g.edges] + [e.score for e in g.null_edges])


# ========== Beam search ==========
@dataclass(frozen=True)
class BeamConfig:
    theta: int = 20
    beta_t: int = 2
    beta_e: int = 2

    def __post_init__(self):
        if self.theta < 1 or self.beta_t < 1 or self.beta_e < 1:
            raise ValueError("beam width and candidate counts must be >= 1")


@dataclass(frozen=True)
class NodeCandidate:
    span: Span
    kind: str
    labels: Tuple[str, ...] = ()
    scores: Optional[np.ndarray] = None  # log-probabilities aligned with labels; None for entities


@dataclass
class BeamCandidate:
    graph: EventGraph
    score: float = 0.0
    order: int = 0

    def extend(self, graph: EventGraph, order: int) -> "BeamCandidate":
        return BeamCandidate(graph, graph_score(graph), order)


@dataclass
class _Beam:
    config: BeamConfig
    entries: List[BeamCandidate] = field(default_factory=list)
    counter: int = 0

    def next_order(self) -> int:
        self.counter += 1
        return self.counter

    def prune(self) -> None:
        if len(self.entries) > self.config.theta:
            self.entries.sort(key=lambda c: (-c.score, c.order))
            self.entries = self.entries[:self.config.theta]


def top_k(scores: np.ndarray, k: int) -> List[int]:
    """Indices of the k largest scores; ties keep the lower index first."""
    return [int(i) for i in np.argsort(-np.asarray(scores), kind="stable")[:k]]


def node_order(nodes: Sequence[NodeCandidate]) -> List[int]:
    return sorted(range(len(nodes)), key=lambda i: (nodes[i].span.start, nodes[i].span.end,
                                                    0 if nodes[i].kind == TRIGGER else 1, i))


def decode(nodes: Sequence[NodeCandidate], edge_scores: Dict[Tuple[int, int], np.ndarray],
           config: BeamConfig, edge_labels: Sequence[str]) -> EventGraph:
    """Beam search over node labels and edge labels.

    `edge_scores[(i, j)]` holds log-probabilities over `edge_labels` (which must
    include NONE) for the directed pair candidate i -> candidate j, where i is a
    trigger. Missing pairs are never linked. Edges that would close a directed
    trigger cycle are rejected.
    """
    if not nodes:
        return EventGraph()
    if NONE_ROLE not in edge_labels:
        raise ValueError("edge labels must include NONE")
    none_idx = list(edge_labels).index(NONE_ROLE)
    order = node_order(nodes)
    beam = _Beam(config, [BeamCandidate(EventGraph())])

    for pos, ref in enumerate(order):
        cand = nodes[ref]
        # ExpandNodeStep
        expanded = []
        for entry in beam.entries:
            if cand.kind == TRIGGER:
                for label_idx in top_k(cand.scores, config.beta_t):
                    node = GraphNode(cand.span, TRIGGER, cand.labels[label_idx], float(cand.scores[label_idx]), ref)
                    expanded.append(entry.extend(entry.graph.add_node(node), beam.next_order()))
            else:
                label = cand.labels[0] if cand.labels else None
                node = GraphNode(cand.span, ENTITY, label, 0.0, ref)
                expanded.append(entry.extend(entry.graph.add_node(node), beam.next_order()))
        beam.entries = expanded
        beam.prune()

        # ExpandEdgeStep: pairs between this node and every earlier node
        for prev_pos in range(pos):
            prev_ref = order[prev_pos]
            for src, dst, src_ref, dst_ref in ((prev_pos, pos, prev_ref, ref), (pos, prev_pos, ref, prev_ref)):
                table = edge_scores.get((src_ref, dst_ref))
                if table is None or nodes[src_ref].kind != TRIGGER:
                    continue
                expanded = []
                for entry in beam.entries:
                    added = False
                    for label_idx in top_k(table, config.beta_e):
                        role = edge_labels[label_idx]
                        if role != NONE_ROLE and nodes[dst_ref].kind == TRIGGER and entry.graph.reaches(dst, src):
                            continue
                        edge = GraphEdge(src, dst, role, float(table[label_idx]))
                        expanded.append(entry.extend(entry.graph.add_edge(edge), beam.next_order()))
                        added = True
                    if not added:
                        edge = GraphEdge(src, dst, NONE_ROLE, float(table[none_idx]))
                        expanded.append(entry.extend(entry.graph.add_edge(edge), beam.next_order()))
                beam.entries = expanded
                beam.prune()
        logger.debug("node %d/%d: beam holds %d graphs", pos + 1, len(order), len(beam.entries))

    best = min(beam.entries, key=lambda c: (-c.score, c.order))
    return best.graph
