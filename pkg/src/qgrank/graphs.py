"""Query graph data model and its canonical one-line serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from qgrank import textio
from qgrank.errors import DataError
from qgrank.kb import Literal

FORWARD = "fwd"
BACKWARD = "bwd"
DIRECTIONS = (FORWARD, BACKWARD)

TOPIC = "topic"
MEDIATOR = "mediator"
ANSWER = "answer"
NODES = (TOPIC, MEDIATOR, ANSWER)


@dataclass(frozen=True, order=True)
class Hop:
    predicate: str
    direction: str = FORWARD

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"bad hop direction {self.direction!r}")


@dataclass(frozen=True)
class MainPath:
    topic_entity: str
    hops: tuple[Hop, ...]

    def __post_init__(self):
        if not 1 <= len(self.hops) <= 2:
            raise ValueError("main path must have 1 or 2 hops")

    @property
    def mediator(self) -> str | None:
        return MEDIATOR if len(self.hops) == 2 else None

    @property
    def answer_var(self) -> str:
        return ANSWER

    def nodes(self) -> tuple[str, ...]:
        return (TOPIC, MEDIATOR, ANSWER) if len(self.hops) == 2 else (TOPIC, ANSWER)


@dataclass(frozen=True, order=True)
class EntityConstraint:
    node: str
    predicate: str
    entity: str
    direction: str = FORWARD  # fwd: node --p--> entity ; bwd: entity --p--> node


@dataclass(frozen=True)
class TypeConstraint:
    type_id: str
    node: str = ANSWER


@dataclass(frozen=True)
class TimeConstraint:
    node: str
    predicate: str
    year: int
    comparator: str


@dataclass(frozen=True)
class OrdinalConstraint:
    node: str
    predicate: str
    direction: str
    rank: int

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("ordinal rank must be >= 1")


@dataclass(frozen=True)
class QueryGraph:
    main: MainPath
    entities: tuple[EntityConstraint, ...] = ()
    type: TypeConstraint | None = None
    time: TimeConstraint | None = None
    ordinal: OrdinalConstraint | None = None

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(sorted(set(self.entities))))
        valid = self.main.nodes()
        for c in self.constraints():
            if c.node not in valid:
                raise ValueError(f"constraint attached to missing node {c.node!r}")

    def constraints(self) -> list:
        out = list(self.entities)
        out += [c for c in (self.type, self.time, self.ordinal) if c is not None]
        return out

    def with_(self, **changes) -> "QueryGraph":
        data = dict(main=self.main, entities=self.entities, type=self.type, time=self.time, ordinal=self.ordinal)
        data.update(changes)
        return QueryGraph(**data)

    def to_line(self) -> str:
        return serialize(self)

    def sort_key(self) -> tuple:
        return (len(self.main.hops), len(self.constraints()), serialize(self))


def serialize(g: QueryGraph) -> str:
    """Canonical text form: a JSON array of main, entities, type, time, ordinal."""
    rec = [
        [g.main.topic_entity, [[h.predicate, h.direction] for h in g.main.hops]],
        [[c.node, c.predicate, c.direction, c.entity] for c in g.entities],
        None if g.type is None else [g.type.node, g.type.type_id],
        None if g.time is None else [g.time.node, g.time.predicate, g.time.comparator, g.time.year],
        None if g.ordinal is None else [g.ordinal.node, g.ordinal.predicate, g.ordinal.direction, g.ordinal.rank],
    ]
    return json.dumps(rec, ensure_ascii=False, separators=(",", ":"))


def deserialize(line: str) -> QueryGraph:
    try:
        main, ents, typ, tim, ordi = json.loads(line)
        topic, hops = main
        return _build(topic, hops, ents, typ, tim, ordi)
    except (ValueError, TypeError) as exc:
        raise ValueError(f"malformed graph line: {exc}") from None


def _build(topic, hops, ents, typ, tim, ordi) -> QueryGraph:
    return QueryGraph(
        main=MainPath(topic, tuple(Hop(p, d) for p, d in hops)),
        entities=tuple(EntityConstraint(n, p, e, d) for n, p, d, e in ents),
        type=None if typ is None else TypeConstraint(typ[1], typ[0]),
        time=None if tim is None else TimeConstraint(tim[0], tim[1], int(tim[3]), tim[2]),
        ordinal=None if ordi is None else OrdinalConstraint(ordi[0], ordi[1], ordi[2], int(ordi[3])),
    )


def dump_graphs(graphs: Iterable[QueryGraph]) -> str:
    return "".join(serialize(g) + "\n" for g in graphs)


def load_graphs(text: str, path=None) -> list[QueryGraph]:
    out = []
    for lineno, line in enumerate(textio.lines(text), start=1):
        if not line.strip():
            continue
        try:
            out.append(deserialize(line))
        except ValueError as exc:
            raise DataError(str(exc), lineno, path) from None
    return out


@dataclass
class AnswerSet:
    answers: frozenset = frozenset()
    bindings: list = field(default_factory=list)

    def __len__(self):
        return len(self.answers)

    def __bool__(self):
        return bool(self.answers)


__all__ = [
    "ANSWER", "AnswerSet", "BACKWARD", "EntityConstraint", "FORWARD", "Hop", "Literal", "MEDIATOR",
    "MainPath", "OrdinalConstraint", "QueryGraph", "TOPIC", "TimeConstraint", "TypeConstraint",
    "deserialize", "dump_graphs", "load_graphs", "serialize",
]
