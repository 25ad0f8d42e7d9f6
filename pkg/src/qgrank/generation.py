"""Staged candidate query-graph generation.

Main paths come from one- and two-hop search around each linked entity;
entity, type, time and ordinal constraints are then attached in that order.
Every stage keeps its input graphs and only adds constraints that leave the
graph with at least one answer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from qgrank.executor import execute
from qgrank.graphs import (
    ANSWER,
    BACKWARD,
    FORWARD,
    MEDIATOR,
    EntityConstraint,
    Hop,
    MainPath,
    OrdinalConstraint,
    QueryGraph,
    TimeConstraint,
    TypeConstraint,
)
from qgrank.kb import RESERVED_PREDICATES, KnowledgeBase, Literal
from qgrank.linking import FocusLinks, LinkerConfig, Lexicon, link_focus_nodes, tokenize


@dataclass
class GeneratorConfig:
    max_main_paths: int = 500
    max_candidates: int = 2000
    allow_non_cvt: bool = False
    linker: LinkerConfig = field(default_factory=LinkerConfig)


def _unique(seq):
    seen = set()
    out = []
    for x in seq:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def _hops_from(kb: KnowledgeBase, node) -> list[tuple[Hop, object]]:
    out = [(Hop(p, FORWARD), o) for p, o in kb.out_edges(node) if p not in RESERVED_PREDICATES]
    out += [(Hop(p, BACKWARD), s) for p, s in kb.in_edges(node) if p not in RESERVED_PREDICATES]
    return out


def generate_main_paths(focus: FocusLinks, kb: KnowledgeBase, limits: GeneratorConfig | None = None) -> list[MainPath]:
    limits = limits or GeneratorConfig()
    paths = []
    for topic in _unique(link.target for link in focus.entities):
        for h1, x in _hops_from(kb, topic):
            paths.append(MainPath(topic, (h1,)))
            if isinstance(x, Literal) or not (x in kb.cvt_marks or limits.allow_non_cvt):
                continue
            for h2, _ in _hops_from(kb, x):
                paths.append(MainPath(topic, (h1, h2)))
    paths = sorted(set(paths), key=lambda p: (len(p.hops), p.topic_entity, p.hops))
    return paths[:limits.max_main_paths]


def constraint_entities(focus: FocusLinks, topic: str) -> list[str]:
    """Linked entities usable as entity constraints for a graph rooted at ``topic``.

    An entity qualifies when it differs from the topic and is linked from at
    least one span the topic itself was not linked from.
    """
    topic_spans = {link.span for link in focus.entities if link.target == topic}
    return _unique(
        link.target for link in focus.entities
        if link.target != topic and link.span not in topic_spans
    )


def _node_values(rows: list[dict], node: str) -> set:
    return {b[node] for b in rows}


def attach_entity_constraints(paths: list[MainPath], focus: FocusLinks, kb: KnowledgeBase) -> list[QueryGraph]:
    out = []
    for path in paths:
        graphs = [QueryGraph(path)]
        for e in constraint_entities(focus, path.topic_entity):
            added = []
            for g in graphs:
                rows = execute(g, kb).bindings
                for node in g.main.nodes():
                    values = _node_values(rows, node)
                    options = {(p, FORWARD) for p, s in kb.in_edges(e) if s in values}
                    options |= {(p, BACKWARD) for p, o in kb.out_edges(e) if o in values}
                    for p, d in sorted(options):
                        cand = g.with_(entities=g.entities + (EntityConstraint(node, p, e, d),))
                        if execute(cand, kb):
                            added.append(cand)
            graphs = graphs + added
        out.extend(graphs)
    return _unique(out)


def attach_type_constraints(graphs: list[QueryGraph], focus: FocusLinks, kb: KnowledgeBase) -> list[QueryGraph]:
    types = _unique(link.target for link in focus.types)
    if not types:
        return list(graphs)
    added = []
    for g in graphs:
        if g.type is not None:
            continue
        answers = execute(g, kb).answers
        present = set().union(*(kb.types_of(a) for a in answers)) if answers else set()
        for t in types:
            if t in present:
                cand = g.with_(type=TypeConstraint(t, ANSWER))
                if execute(cand, kb):
                    added.append(cand)
    return _unique(list(graphs) + added)


def attach_time_constraints(graphs: list[QueryGraph], focus: FocusLinks, kb: KnowledgeBase) -> list[QueryGraph]:
    times = _unique(link.target for link in focus.times)
    if not times:
        return list(graphs)
    added = []
    for g in graphs:
        if g.time is not None:
            continue
        rows = execute(g, kb).bindings
        for node in g.main.nodes():
            preds = sorted({
                p for v in _node_values(rows, node) for p, o in kb.out_edges(v)
                if isinstance(o, Literal) and o.is_date
            })
            for tv in times:
                for p in preds:
                    cand = g.with_(time=TimeConstraint(node, p, tv.year, tv.comparator))
                    if execute(cand, kb):
                        added.append(cand)
    return _unique(list(graphs) + added)


def attach_ordinal_constraints(graphs: list[QueryGraph], focus: FocusLinks, kb: KnowledgeBase) -> list[QueryGraph]:
    ordinals = _unique(link.target for link in focus.ordinals)
    if not ordinals:
        return list(graphs)
    added = []
    for g in graphs:
        if g.ordinal is not None:
            continue
        rows = execute(g, kb).bindings
        for node in (n for n in g.main.nodes() if n in (MEDIATOR, ANSWER)):
            preds = sorted({
                p for v in _node_values(rows, node) for p, o in kb.out_edges(v)
                if isinstance(o, Literal) and o.is_numeric
            })
            for ov in ordinals:
                for p in preds:
                    cand = g.with_(ordinal=OrdinalConstraint(node, p, ov.direction, ov.rank))
                    if execute(cand, kb):
                        added.append(cand)
    return _unique(list(graphs) + added)


def generate_from_links(focus: FocusLinks, kb: KnowledgeBase, config: GeneratorConfig | None = None) -> list[QueryGraph]:
    config = config or GeneratorConfig()
    paths = generate_main_paths(focus, kb, config)
    graphs = attach_entity_constraints(paths, focus, kb)
    graphs = attach_type_constraints(graphs, focus, kb)
    graphs = attach_time_constraints(graphs, focus, kb)
    graphs = attach_ordinal_constraints(graphs, focus, kb)
    graphs = sorted(set(graphs), key=QueryGraph.sort_key)
    return graphs[:config.max_candidates]


def generate_candidates(question, kb: KnowledgeBase, lexicon: Lexicon, config: GeneratorConfig | None = None) -> list[QueryGraph]:
    config = config or GeneratorConfig()
    tokens = tokenize(question) if isinstance(question, str) else list(question)
    focus = link_focus_nodes(tokens, kb, lexicon, config.linker)
    return generate_from_links(focus, kb, config)
