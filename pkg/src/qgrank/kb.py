"""In-memory triple store with forward/backward adjacency indexes.

File format (UTF-8, tab separated)::

    subject<TAB>predicate<TAB>object[<TAB>literal-kind]
    # comment
    #cvt<TAB>entity-id

Objects without a literal kind are entity ids. Type assertions use the
reserved predicate ``isa`` and display names the reserved predicate ``name``.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

from qgrank import textio
from qgrank.errors import DataError

ISA = "isa"
NAME = "name"
RESERVED_PREDICATES = frozenset({ISA, NAME})

LITERAL_KINDS = ("string", "integer", "float", "date")
NUMERIC_KINDS = frozenset({"integer", "float"})

_YEAR_RE = re.compile(r"^(-?\d{1,4})")


@dataclass(frozen=True, order=True)
class Literal:
    value: str
    kind: str = "string"

    def __post_init__(self):
        if self.kind not in LITERAL_KINDS:
            raise ValueError(f"unknown literal kind {self.kind!r}")

    @property
    def is_numeric(self) -> bool:
        return self.kind in NUMERIC_KINDS

    @property
    def is_date(self) -> bool:
        return self.kind == "date"

    def number(self) -> float:
        return float(self.value)

    def year(self) -> int:
        m = _YEAR_RE.match(self.value)
        if m is None:
            raise ValueError(f"date literal without a year: {self.value!r}")
        return int(m.group(1))

    def __str__(self):
        return self.value


Node = Union[str, Literal]


def node_key(node: Node) -> tuple:
    """Total order over entities and literals: entities first, then literals."""
    if isinstance(node, Literal):
        return (1, node.value, node.kind)
    return (0, node, "")


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: Node

    def __post_init__(self):
        if not self.subject or not self.predicate:
            raise ValueError("subject and predicate must be non-empty")
        if not isinstance(self.subject, str):
            raise ValueError("literals cannot be subjects")

    def sort_key(self) -> tuple:
        return (self.subject, self.predicate, node_key(self.object))


def _edge_key(edge: tuple[str, Node]) -> tuple:
    return (edge[0], node_key(edge[1]))


@dataclass
class KnowledgeBase:
    triples: frozenset = frozenset()
    out_index: dict = field(default_factory=dict)
    in_index: dict = field(default_factory=dict)
    cvt_marks: frozenset = frozenset()
    type_assertions: dict = field(default_factory=dict)
    type_vocab: frozenset = frozenset()
    names: dict = field(default_factory=dict)

    @classmethod
    def from_triples(cls, triples: Iterable[Triple], cvt: Iterable[str] = ()) -> "KnowledgeBase":
        triples = frozenset(triples)
        out_index: dict[str, list] = defaultdict(list)
        in_index: dict[str, list] = defaultdict(list)
        types: dict[str, set] = defaultdict(set)
        names: dict[str, str] = {}
        for t in sorted(triples, key=Triple.sort_key):
            out_index[t.subject].append((t.predicate, t.object))
            if isinstance(t.object, str):
                in_index[t.object].append((t.predicate, t.subject))
            if t.predicate == ISA:
                types[t.subject].add(str(t.object))
            elif t.predicate == NAME and t.subject not in names:
                names[t.subject] = str(t.object)
        for index in (out_index, in_index):
            for edges in index.values():
                edges.sort(key=_edge_key)
        cvt = frozenset(cvt)
        nodes = set(out_index) | set(in_index)
        unknown = sorted(cvt - nodes)
        if unknown:
            raise DataError(f"#cvt directive names unknown entities: {', '.join(unknown[:5])}")
        return cls(
            triples=triples,
            out_index=dict(out_index),
            in_index=dict(in_index),
            cvt_marks=cvt,
            type_assertions={e: frozenset(ts) for e, ts in types.items()},
            type_vocab=frozenset().union(*types.values()) if types else frozenset(),
            names=names,
        )

    def __len__(self):
        return len(self.triples)

    def out_edges(self, e: Node) -> list[tuple[str, Node]]:
        if not isinstance(e, str):
            return []
        return list(self.out_index.get(e, ()))

    def in_edges(self, e: Node) -> list[tuple[str, str]]:
        if not isinstance(e, str):
            return []
        return list(self.in_index.get(e, ()))

    def types_of(self, e: Node) -> frozenset:
        if not isinstance(e, str):
            return frozenset()
        return self.type_assertions.get(e, frozenset())

    def objects(self, s: Node, p: str) -> list[Node]:
        return [o for pred, o in self.out_edges(s) if pred == p]

    def subjects(self, o: Node, p: str) -> list[str]:
        return [s for pred, s in self.in_edges(o) if pred == p]

    def entities(self) -> list[str]:
        return sorted(set(self.out_index) | set(self.in_index))

    def predicates(self) -> list[str]:
        return sorted({t.predicate for t in self.triples})

    def name_of(self, e: str) -> str | None:
        return self.names.get(e)


# module-level aliases matching the operation names used elsewhere
def out_edges(kb: KnowledgeBase, e: Node) -> list[tuple[str, Node]]:
    return kb.out_edges(e)


def in_edges(kb: KnowledgeBase, e: Node) -> list[tuple[str, str]]:
    return kb.in_edges(e)


def types_of(kb: KnowledgeBase, e: Node) -> frozenset:
    return kb.types_of(e)


def parse_triple_line(line: str, lineno: int | None = None, path=None) -> Triple | str | None:
    """Parse one line. Returns a Triple, a cvt entity id (for ``#cvt``), or None."""
    line = line.rstrip("\r\n")
    if not line.strip():
        return None
    if line.startswith("#"):
        if line.startswith("#cvt"):
            parts = line.split("\t")
            if parts[0] != "#cvt" or len(parts) != 2 or not parts[1]:
                raise DataError("malformed #cvt directive", lineno, path)
            return parts[1]
        return None
    parts = line.split("\t")
    if len(parts) not in (3, 4):
        raise DataError(f"expected 3 or 4 tab-separated fields, got {len(parts)}", lineno, path)
    s, p, o = parts[:3]
    if not s or not p:
        raise DataError("empty subject or predicate", lineno, path)
    if len(parts) == 4:
        kind = parts[3]
        if kind not in LITERAL_KINDS:
            raise DataError(f"unknown literal kind {kind!r}", lineno, path)
        obj: Node = Literal(o, kind)
        try:
            if obj.is_numeric:
                obj.number()
            elif obj.is_date:
                obj.year()
        except ValueError as exc:
            raise DataError(str(exc), lineno, path) from None
    else:
        if not o:
            raise DataError("empty object", lineno, path)
        obj = o
    return Triple(s, p, obj)


def parse_kb_lines(lines: Iterable[str], path=None) -> KnowledgeBase:
    triples = []
    cvt = []
    for lineno, line in enumerate(lines, start=1):
        rec = parse_triple_line(line, lineno, path)
        if isinstance(rec, Triple):
            triples.append(rec)
        elif isinstance(rec, str):
            cvt.append(rec)
    return KnowledgeBase.from_triples(triples, cvt)


def load_kb(path) -> KnowledgeBase:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read KB file: {exc}", path=path) from exc
    return parse_kb_lines(textio.lines(text), path=path)


def format_triple(t: Triple) -> str:
    if isinstance(t.object, Literal):
        return f"{t.subject}\t{t.predicate}\t{t.object.value}\t{t.object.kind}"
    return f"{t.subject}\t{t.predicate}\t{t.object}"


def dump_kb(kb: KnowledgeBase, path) -> None:
    lines = [f"#cvt\t{e}" for e in sorted(kb.cvt_marks)]
    lines += [format_triple(t) for t in sorted(kb.triples, key=Triple.sort_key)]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def _humanize(s: str) -> str:
    return " ".join(s.replace("_", " ").split()).lower()


class NameResolver:
    """Surface strings for entity, predicate and type ids.

    KB ``name`` triples win; otherwise ids are humanized: underscores become
    spaces, predicates keep only their last dotted segment and types keep
    every segment (``people.person`` -> ``people person``).
    """

    def __init__(self, kb: KnowledgeBase | None = None, overrides: dict | None = None):
        self.names = kb.names if kb is not None else {}
        if overrides:
            self.names = {**self.names, **overrides}

    def entity(self, node: Node) -> str:
        if isinstance(node, Literal):
            return node.value.lower()
        if node in self.names:
            return self.names[node].lower()
        return _humanize(node)

    def predicate(self, p: str) -> str:
        if p in self.names:
            return self.names[p].lower()
        return _humanize(p.rsplit(".", 1)[-1])

    def type(self, t: str) -> str:
        if t in self.names:
            return self.names[t].lower()
        return _humanize(t.replace(".", " "))
