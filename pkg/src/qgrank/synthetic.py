"""Synthetic worlds: the prime-minister example, random toy KBs, benchmarks."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from qgrank.graphs import (
    ANSWER,
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
from qgrank.kb import ISA, NAME, KnowledgeBase, Literal, Triple, dump_kb
from qgrank.linearize import SEPARATORS, LinearSequence
from qgrank.linking import dump_lexicon, make_lexicon
from qgrank.ranking import Candidate, QuestionCandidates


# --- the running example ------------------------------------------------------------

SPAIN_QUESTION = "who is the highest prime minister of spain after 1980?"


def spain_kb() -> KnowledgeBase:
    """Spain's governing officials: two prime ministers and a king."""
    t = [
        Triple("spain", NAME, Literal("Spain")),
        Triple("spain", ISA, "location.country"),
        Triple("prime_minister", NAME, Literal("Prime Minister")),
        Triple("prime_minister", ISA, "government.office"),
        Triple("king", NAME, Literal("King")),
        Triple("king", ISA, "government.office"),
    ]
    officials = [
        ("cvt1", "felipe_gonzalez", "Felipe Gonzalez", "prime_minister", "1982", "1.85"),
        ("cvt2", "adolfo_suarez", "Adolfo Suarez", "prime_minister", "1975", "1.70"),
        ("cvt3", "juan_carlos", "Juan Carlos", "king", "1975", "1.88"),
    ]
    for cvt, person, name, title, year, height in officials:
        t += [
            Triple("spain", "governing_officials", cvt),
            Triple(cvt, "basic_title", title),
            Triple(cvt, "office_holder", person),
            Triple(cvt, "from", Literal(year, "date")),
            Triple(person, NAME, Literal(name)),
            Triple(person, ISA, "people.person"),
            Triple(person, "height", Literal(height, "float")),
        ]
    t += [
        Triple("spain", "capital", "madrid"),
        Triple("madrid", NAME, Literal("Madrid")),
        Triple("madrid", ISA, "location.city"),
    ]
    return KnowledgeBase.from_triples(t, cvt=["cvt1", "cvt2", "cvt3"])


def spain_lexicon():
    return make_lexicon([("spain", "spain", 0.9), ("prime minister", "prime_minister", 0.8), ("king", "king", 0.7)])


def spain_gold_graph() -> QueryGraph:
    return QueryGraph(
        main=MainPath("spain", (Hop("governing_officials"), Hop("office_holder"))),
        entities=(EntityConstraint(MEDIATOR, "basic_title", "prime_minister", FORWARD),),
        type=TypeConstraint("people.person", ANSWER),
        time=TimeConstraint(MEDIATOR, "from", 1980, "after"),
        ordinal=OrdinalConstraint(ANSWER, "height", "max", 1),
    )


# --- random toy KBs -----------------------------------------------------------------------

def random_toy_kb(rng: np.random.Generator, n_entities: int = 8, n_cvt: int = 3, n_edges: int = 30,
                  n_predicates: int = 4, n_types: int = 3, n_literals: int = 10) -> KnowledgeBase:
    ents = [f"e{i}" for i in range(n_entities)]
    cvts = [f"c{i}" for i in range(n_cvt)]
    nodes = ents + cvts
    preds = [f"p{i}" for i in range(n_predicates)]
    triples = set()
    for _ in range(n_edges):
        s, o = rng.choice(nodes, size=2)
        triples.add(Triple(str(s), str(rng.choice(preds)), str(o)))
    for _ in range(n_literals):
        s = str(rng.choice(nodes))
        if rng.random() < 0.5:
            triples.add(Triple(s, str(rng.choice(["born", "from"])), Literal(str(int(rng.integers(1970, 1991))), "date")))
        else:
            triples.add(Triple(s, str(rng.choice(["height", "size"])), Literal(str(int(rng.integers(1, 6))), "integer")))
    for e in ents:
        if rng.random() < 0.6:
            triples.add(Triple(e, ISA, f"t{int(rng.integers(n_types))}"))
    present = {t.subject for t in triples} | {t.object for t in triples if isinstance(t.object, str)}
    return KnowledgeBase.from_triples(triples, cvt=[c for c in cvts if c in present])


# --- marker-token separable benchmark ---------------------------------------------------------

MARKER = "zmarker"


def separable_benchmark(n_train: int = 500, n_val: int = 100, n_candidates: int = 12, seed: int = 0,
                        vocab_size: int = 60) -> tuple[list[QuestionCandidates], list[QuestionCandidates]]:
    """Questions whose positive candidates (one or two) carry a marker token."""
    rng = np.random.default_rng(seed)
    words = [f"w{i}" for i in range(vocab_size)]

    def make(i):
        q = tuple(rng.choice(words, size=int(rng.integers(4, 9))).tolist())
        n_pos = int(rng.integers(1, 3))
        cands = []
        for j in range(n_candidates):
            body = rng.choice(words, size=int(rng.integers(3, 7))).tolist()
            positive = j < n_pos
            if positive:
                body.insert(int(rng.integers(0, len(body) + 1)), MARKER)
            seq = LinearSequence(tuple(list(SEPARATORS) + body + ["[A]"]))
            graph = QueryGraph(MainPath(f"q{i}", (Hop(f"r{j}"),)))
            cands.append(Candidate(graph, seq, 1.0 if positive else 0.0))
        order = rng.permutation(len(cands))
        return QuestionCandidates(f"q{i}", q, [cands[k] for k in order])

    data = [make(i) for i in range(n_train + n_val)]
    return data[:n_train], data[n_train:]


# --- templated QA world --------------------------------------------------------------------------

@dataclass
class QAWorld:
    kb: KnowledgeBase
    lexicon: dict
    examples: list  # list of (id, question, gold answers, split, gold graph)

    def dataset(self):
        from qgrank.pipeline import QAExample

        return [QAExample(qid, q, frozenset(a), split) for qid, q, a, split, _ in self.examples]

    def save(self, directory) -> dict:
        """Write kb.tsv, lexicon.tsv and dataset.jsonl; returns their paths."""
        from qgrank.pipeline import save_dataset

        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {"kb": d / "kb.tsv", "lexicon": d / "lexicon.tsv", "dataset": d / "dataset.jsonl"}
        dump_kb(self.kb, paths["kb"])
        dump_lexicon(self.lexicon, paths["lexicon"])
        save_dataset(self.dataset(), paths["dataset"])
        return paths


_RELATIONS = [
    ("capital", "city", "what is the capital of {c} ?"),
    ("currency", "currency", "what currency does {c} use ?"),
    ("official_language", "language", "what language is spoken in {c} ?"),
    ("continent", "continent", "which continent is {c} located on ?"),
    ("national_anthem", "anthem", "what is the national anthem of {c} ?"),
]


def qa_world(n_countries: int = 60, seed: int = 0, splits=(0.6, 0.2)) -> QAWorld:
    """Countries with simple attributes and governing officials.

    Question templates cover one-hop attributes, two-hop office holders
    with an entity constraint, and an ordinal ("tallest") variant.
    """
    rng = np.random.default_rng(seed)
    triples = [
        Triple("president", NAME, Literal("President")),
        Triple("prime_minister", NAME, Literal("Prime Minister")),
    ]
    cvts = []
    lex = [("president", "president", 0.8), ("prime minister", "prime_minister", 0.8)]
    shared = {kind: [f"{kind}_{i}" for i in range(8)] for _, kind, _ in _RELATIONS}
    for kind, ids in shared.items():
        for e in ids:
            triples.append(Triple(e, NAME, Literal(e.replace("_", " "))))
            triples.append(Triple(e, ISA, f"location.{kind}" if kind in ("city", "continent") else f"common.{kind}"))
    examples = []
    for ci in range(n_countries):
        c = f"country_{ci}"
        cname = f"country {ci}"
        triples += [Triple(c, NAME, Literal(cname)), Triple(c, ISA, "location.country")]
        lex.append((cname, c, 0.9))
        for pred, kind, _ in _RELATIONS:
            triples.append(Triple(c, pred, str(rng.choice(shared[kind]))))
        for k in range(4):
            cvt = f"{c}_office_{k}"
            person = f"{c}_leader_{k}"
            title = "president" if k % 2 == 0 else "prime_minister"
            cvts.append(cvt)
            triples += [
                Triple(c, "governing_officials", cvt),
                Triple(cvt, "basic_title", title),
                Triple(cvt, "office_holder", person),
                Triple(cvt, "from", Literal(str(1950 + 10 * k + int(rng.integers(0, 9))), "date")),
                Triple(person, NAME, Literal(f"leader {ci} {k}")),
                Triple(person, ISA, "people.person"),
                Triple(person, "height", Literal(f"{1.6 + 0.05 * int(rng.integers(0, 8)):.2f}", "float")),
            ]
    kb = KnowledgeBase.from_triples(triples, cvts)

    from qgrank.executor import execute

    n = 0
    for ci in range(n_countries):
        c = f"country_{ci}"
        cname = f"country {ci}"
        picks = rng.permutation(len(_RELATIONS) + 3)[:2]
        for pick in picks:
            if pick < len(_RELATIONS):
                pred, _, template = _RELATIONS[pick]
                q = template.format(c=cname)
                g = QueryGraph(MainPath(c, (Hop(pred),)))
            else:
                title = ["president", "prime_minister", "president"][pick - len(_RELATIONS)]
                title_words = title.replace("_", " ")
                main = MainPath(c, (Hop("governing_officials"), Hop("office_holder")))
                cons = (EntityConstraint(MEDIATOR, "basic_title", title, FORWARD),)
                if pick - len(_RELATIONS) == 2:
                    q = f"who was the tallest {title_words} of {cname} ?"
                    g = QueryGraph(main, cons, ordinal=OrdinalConstraint(ANSWER, "height", "max", 1))
                else:
                    q = f"who has been {title_words} of {cname} ?"
                    g = QueryGraph(main, cons)
            answers = sorted(str(a) for a in execute(g, kb).answers)
            examples.append((f"q{n}", q, answers, g))
            n += 1
    order = rng.permutation(len(examples))
    n_train = int(splits[0] * len(examples))
    n_val = int(splits[1] * len(examples))
    out = []
    for rank, idx in enumerate(order):
        split = "train" if rank < n_train else "validation" if rank < n_train + n_val else "test"
        qid, q, answers, g = examples[idx]
        out.append((qid, q, answers, split, g))
    return QAWorld(kb, make_lexicon(lex), out)
