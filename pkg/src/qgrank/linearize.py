"""Query graph -> token sequence.

The sequence is TypePath [unused0] EntityPath [unused1] TimePath [unused2]
OrdinalPath [unused3] MainPath. Constraint sub-paths end with a period token;
the main path ends with the answer slot ``[A]``, which is filled with the
graph's actual answers unless the answer ablation is on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from qgrank.graphs import AnswerSet, QueryGraph
from qgrank.kb import NameResolver, node_key
from qgrank.linking import tokenize

SEPARATORS = ("[unused0]", "[unused1]", "[unused2]", "[unused3]")
ANSWER_SLOT = "[A]"
HOP_JOINER = "--"
PERIOD = "."
_ATTACHED = {".", ",", "?"}


@dataclass
class SubPaths:
    type_path: list[str] = field(default_factory=list)
    entity_path: list[str] = field(default_factory=list)
    time_path: list[str] = field(default_factory=list)
    ordinal_path: list[str] = field(default_factory=list)
    main_path: list[str] = field(default_factory=list)

    def constraint_paths(self) -> list[list[str]]:
        return [self.type_path, self.entity_path, self.time_path, self.ordinal_path]


@dataclass
class LinearizerConfig:
    include_constraints: bool = True  # False = "w/o constraints" ablation
    include_answer: bool = True  # False = "w/o answer" ablation, keeps literal [A]
    empty_separators: bool = True  # emit separators after empty sub-paths
    max_answers: int = 3


@dataclass(frozen=True)
class LinearSequence:
    tokens: tuple[str, ...]

    def __post_init__(self):
        positions = [self.tokens.index(s) for s in SEPARATORS if s in self.tokens]
        if any(self.tokens.count(s) > 1 for s in SEPARATORS) or positions != sorted(positions):
            raise ValueError("separators must appear at most once and in order")

    def text(self) -> str:
        """Human form: tokens joined by spaces, punctuation attached to the left."""
        out = []
        for tok in self.tokens:
            if tok in _ATTACHED and out:
                out[-1] += tok
            else:
                out.append(tok)
        return " ".join(out)

    def line(self) -> str:
        return " ".join(self.tokens)

    @classmethod
    def from_line(cls, line: str) -> "LinearSequence":
        return cls(tuple(line.split()))

    def __len__(self):
        return len(self.tokens)


def _words(s: str) -> list[str]:
    return tokenize(s)


def decompose(graph: QueryGraph, names: NameResolver | None = None) -> SubPaths:
    names = names or NameResolver()
    sub = SubPaths()
    if graph.type is not None:
        sub.type_path = _words(names.type(graph.type.type_id)) + [PERIOD]
    for c in graph.entities:
        sub.entity_path += _words(names.predicate(c.predicate)) + _words(names.entity(c.entity)) + [PERIOD]
    if graph.time is not None:
        t = graph.time
        sub.time_path = _words(names.predicate(t.predicate)) + [t.comparator, str(t.year), PERIOD]
    if graph.ordinal is not None:
        o = graph.ordinal
        sub.ordinal_path = _words(names.predicate(o.predicate)) + [o.direction, str(o.rank), PERIOD]
    main = _words(names.entity(graph.main.topic_entity))
    for i, hop in enumerate(graph.main.hops):
        if i:
            main.append(HOP_JOINER)
        main += _words(names.predicate(hop.predicate))
    sub.main_path = main + [ANSWER_SLOT]
    return sub


def answer_tokens(answers: Iterable, names: NameResolver, k: int = 3) -> list[str]:
    """Tokens for the first ``k`` answers in node order, comma separated."""
    chosen = sorted(answers, key=node_key)[:k]
    out: list[str] = []
    for i, a in enumerate(chosen):
        if i:
            out.append(",")
        out += _words(names.entity(a)) or [str(a)]
    return out


def assemble(sub: SubPaths, config: LinearizerConfig | None = None) -> list[str]:
    config = config or LinearizerConfig()
    tokens: list[str] = []
    for path, sep in zip(sub.constraint_paths(), SEPARATORS):
        if config.include_constraints:
            tokens += path
        if config.empty_separators or (path and config.include_constraints):
            tokens.append(sep)
    return tokens + sub.main_path


def linearize(
    graph: QueryGraph,
    answers: AnswerSet | Iterable | None = None,
    config: LinearizerConfig | None = None,
    names: NameResolver | None = None,
) -> LinearSequence:
    config = config or LinearizerConfig()
    names = names or NameResolver()
    sub = decompose(graph, names)
    if config.include_answer and answers is not None:
        values = answers.answers if isinstance(answers, AnswerSet) else answers
        filled = answer_tokens(values, names, config.max_answers)
        if filled:
            sub.main_path = sub.main_path[:-1] + filled
    return LinearSequence(tuple(assemble(sub, config)))
