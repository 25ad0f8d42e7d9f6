"""Native execution of query graphs against a KnowledgeBase."""

from __future__ import annotations

from typing import Iterable

from qgrank.graphs import (
    ANSWER,
    BACKWARD,
    FORWARD,
    MEDIATOR,
    TOPIC,
    AnswerSet,
    Hop,
    QueryGraph,
)
from qgrank.kb import ISA, KnowledgeBase, Literal, Node, Triple, node_key

VAR_ORDER = (TOPIC, MEDIATOR, ANSWER, "time", "ordinal")


def has_triple(kb: KnowledgeBase, s: Node, p: str, o: Node) -> bool:
    if not isinstance(s, str):
        return False
    return Triple(s, p, o) in kb.triples


def step(kb: KnowledgeBase, node: Node, hop: Hop) -> list[Node]:
    if hop.direction == FORWARD:
        return kb.objects(node, hop.predicate)
    return kb.subjects(node, hop.predicate)


def compare_year(year: int, comparator: str, target: int) -> bool:
    if comparator == "after":
        return year > target
    if comparator == "before":
        return year < target
    return year == target


def binding_key(b: dict) -> tuple:
    return tuple(node_key(b[v]) if v in b else (-1,) for v in VAR_ORDER)


def _main_bindings(graph: QueryGraph, kb: KnowledgeBase) -> list[dict]:
    topic = graph.main.topic_entity
    rows = []
    first = graph.main.hops[0]
    for x in step(kb, topic, first):
        if len(graph.main.hops) == 1:
            rows.append({TOPIC: topic, ANSWER: x})
        else:
            for a in step(kb, x, graph.main.hops[1]):
                rows.append({TOPIC: topic, MEDIATOR: x, ANSWER: a})
    return rows


def execute(graph: QueryGraph, kb: KnowledgeBase) -> AnswerSet:
    """Evaluate ``graph`` as a basic graph pattern plus time filter and ordinal pick."""
    rows = _main_bindings(graph, kb)
    for c in graph.entities:
        if c.direction == FORWARD:
            rows = [b for b in rows if has_triple(kb, b[c.node], c.predicate, c.entity)]
        else:
            rows = [b for b in rows if has_triple(kb, c.entity, c.predicate, b[c.node])]
    if graph.type is not None:
        rows = [b for b in rows if graph.type.type_id in kb.types_of(b[graph.type.node])]
    if graph.time is not None:
        tc = graph.time
        rows = [
            {**b, "time": v}
            for b in rows
            for v in kb.objects(b[tc.node], tc.predicate)
            if isinstance(v, Literal) and v.is_date and compare_year(v.year(), tc.comparator, tc.year)
        ]
    rows = _dedup(rows)
    if graph.ordinal is not None:
        oc = graph.ordinal
        rows = [
            {**b, "ordinal": v}
            for b in rows
            for v in kb.objects(b[oc.node], oc.predicate)
            if isinstance(v, Literal) and v.is_numeric
        ]
        rows = _dedup(rows)
        sign = -1.0 if oc.direction == "max" else 1.0
        rows.sort(key=lambda b: (sign * b["ordinal"].number(), node_key(b[ANSWER]), binding_key(b)))
        rows = rows[oc.rank - 1:oc.rank]
    return AnswerSet(frozenset(b[ANSWER] for b in rows), rows)


def _dedup(rows: list[dict]) -> list[dict]:
    seen = {}
    for b in rows:
        seen.setdefault(binding_key(b), b)
    return [seen[k] for k in sorted(seen)]


def answer_f1(predicted, gold) -> float:
    pred = set(predicted.answers if isinstance(predicted, AnswerSet) else predicted)
    gold = set(gold)
    if not pred or not gold:
        return 0.0
    hit = len(pred & gold)
    if hit == 0:
        return 0.0
    p = hit / len(pred)
    r = hit / len(gold)
    return 2 * p * r / (p + r)


def answer_strings(answers: Iterable[Node]) -> list[str]:
    """Answers as strings (entity ids or literal values), in deterministic order."""
    return [str(a) for a in sorted(answers, key=node_key)]


# --- SPARQL-style export ---------------------------------------------------------

_VARS = {TOPIC: None, MEDIATOR: "?m", ANSWER: "?a"}


def _term(node: Node) -> str:
    if isinstance(node, Literal):
        return f'"{node.value}"^^:{node.kind}'
    return f":{node}"


def _node_term(graph: QueryGraph, node: str) -> str:
    if node == TOPIC:
        return _term(graph.main.topic_entity)
    return _VARS[node]


def to_sparql_text(graph: QueryGraph) -> str:
    main = graph.main
    path_nodes = [_term(main.topic_entity)] + (["?m"] if len(main.hops) == 2 else []) + ["?a"]
    patterns = []
    for i, hop in enumerate(main.hops):
        s, o = path_nodes[i], path_nodes[i + 1]
        if hop.direction == BACKWARD:
            s, o = o, s
        patterns.append(f"{s} :{hop.predicate} {o} .")
    for c in graph.entities:
        n = _node_term(graph, c.node)
        if c.direction == FORWARD:
            patterns.append(f"{n} :{c.predicate} {_term(c.entity)} .")
        else:
            patterns.append(f"{_term(c.entity)} :{c.predicate} {n} .")
    if graph.type is not None:
        patterns.append(f"{_node_term(graph, graph.type.node)} :{ISA} {_term(graph.type.type_id)} .")
    filters = []
    if graph.time is not None:
        t = graph.time
        patterns.append(f"{_node_term(graph, t.node)} :{t.predicate} ?t .")
        op = {"after": ">", "before": "<", "in": "="}[t.comparator]
        filters.append(f"FILTER(YEAR(?t) {op} {t.year})")
    modifiers = ""
    if graph.ordinal is not None:
        o = graph.ordinal
        patterns.append(f"{_node_term(graph, o.node)} :{o.predicate} ?o .")
        order = "DESC" if o.direction == "max" else "ASC"
        modifiers = f"\nORDER BY {order}(?o) ?a\nOFFSET {o.rank - 1} LIMIT 1"
    body = "\n".join("  " + line for line in patterns + filters)
    select = "SELECT ?a" if graph.ordinal is not None else "SELECT DISTINCT ?a"
    return f"# {graph.to_line()}\n{select} WHERE {{\n{body}\n}}{modifiers}\n"


def graph_from_sparql_text(text: str) -> QueryGraph:
    """Recover the graph from the canonical header line of ``to_sparql_text`` output."""
    from qgrank.graphs import deserialize

    first = text.splitlines()[0]
    if not first.startswith("# "):
        raise ValueError("missing canonical graph header")
    return deserialize(first[2:])
