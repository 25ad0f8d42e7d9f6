"""Dataset I/O, end-to-end pipeline runs, evaluation and ablations."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from qgrank import textio
from qgrank.errors import DataError
from qgrank.executor import answer_f1, answer_strings, execute
from qgrank.generation import GeneratorConfig, generate_from_links
from qgrank.graphs import QueryGraph
from qgrank.kb import KnowledgeBase, NameResolver
from qgrank.linearize import LinearizerConfig, linearize
from qgrank.linking import Lexicon, link_focus_nodes, tokenize
from qgrank.ranking import (
    STRATEGIES,
    Candidate,
    QuestionCandidates,
    TrainConfig,
    candidate_scores,
    select_index,
    train,
)

log = logging.getLogger(__name__)

SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class QAExample:
    id: str
    question: str
    gold_answers: frozenset
    split: str = "test"

    def __post_init__(self):
        if not self.question.strip():
            raise ValueError("question must be non-empty")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}")
        if self.split in ("train", "validation") and not self.gold_answers:
            raise ValueError(f"{self.split} example {self.id!r} has no gold answers")

    def to_record(self) -> dict:
        return {"id": self.id, "question": self.question, "answers": sorted(self.gold_answers), "split": self.split}


def parse_dataset(lines: Iterable[str], path=None) -> list[QAExample]:
    out = []
    for idx, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            answers = rec["answers"]
            if not isinstance(answers, list):
                raise ValueError("answers must be a list")
            out.append(QAExample(str(rec["id"]), rec["question"], frozenset(map(str, answers)), rec.get("split", "test")))
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"bad dataset record: {exc}", idx, path) from None
    return out


def load_dataset(path) -> list[QAExample]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read dataset: {exc}", path=path) from exc
    return parse_dataset(textio.lines(text), path)


def dumps_dataset(examples: Iterable[QAExample]) -> str:
    return "".join(json.dumps(e.to_record(), ensure_ascii=False, sort_keys=True) + "\n" for e in examples)


def save_dataset(examples: Iterable[QAExample], path) -> None:
    Path(path).write_text(dumps_dataset(examples), encoding="utf-8")


# --- candidate preparation -----------------------------------------------------------------

@dataclass
class PipelineConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    linearizer: LinearizerConfig = field(default_factory=LinearizerConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    workers: int = 1

    def echo(self) -> dict:
        gen = asdict(replace(self.generator, linker=None))
        gen.pop("linker")
        return {"generator": gen, "linearizer": asdict(self.linearizer), "train": asdict(self.train)}


@dataclass
class CandidatePool:
    """A question's generated graphs with their executed answers and gold F1."""

    example: QAExample
    tokens: tuple[str, ...]
    graphs: list[QueryGraph]
    answers: list[frozenset]
    f1s: list[float]

    @property
    def ceiling(self) -> float:
        return max(self.f1s, default=0.0)

    def candidates(self, config: LinearizerConfig, names: NameResolver) -> QuestionCandidates:
        cands = [
            Candidate(g, linearize(g, a, config, names), f)
            for g, a, f in zip(self.graphs, self.answers, self.f1s)
        ]
        return QuestionCandidates(self.example.id, self.tokens, cands)


def build_pool(example: QAExample, kb: KnowledgeBase, lexicon: Lexicon, config: GeneratorConfig) -> CandidatePool:
    tokens = tuple(tokenize(example.question))
    focus = link_focus_nodes(list(tokens), kb, lexicon, config.linker)
    graphs = generate_from_links(focus, kb, config)
    answers = [execute(g, kb).answers for g in graphs]
    f1s = [answer_f1(answer_strings(a), example.gold_answers) for a in answers]
    return CandidatePool(example, tokens, graphs, answers, f1s)


def build_pools(dataset: Sequence[QAExample], kb, lexicon, config: PipelineConfig) -> list[CandidatePool]:
    def one(ex):
        return build_pool(ex, kb, lexicon, config.generator)

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            return list(pool.map(one, dataset))
    return [one(ex) for ex in dataset]


# --- reports -------------------------------------------------------------------------------------

@dataclass
class QuestionRow:
    id: str
    graph: str | None
    predicted: list[str]
    f1: float
    ceiling: float
    n_candidates: int
    error: str | None = None


@dataclass
class RunReport:
    rows: list[QuestionRow]
    config: dict
    timing: float = 0.0

    @property
    def average_f1(self) -> float:
        return float(np.mean([r.f1 for r in self.rows])) if self.rows else 0.0

    @property
    def generation_ceiling(self) -> float:
        return float(np.mean([r.ceiling for r in self.rows])) if self.rows else 0.0

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "questions": len(self.rows),
            "average_f1": self.average_f1,
            "generation_ceiling": self.generation_ceiling,
            "config": self.config,
            "rows": [asdict(r) for r in self.rows],
        }
        if include_timing:
            d["timing_seconds"] = self.timing
        return d

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=1, ensure_ascii=False) + "\n"

    def answers_dump(self) -> str:
        return "".join(f"{r.id}\t{';'.join(r.predicted)}\n" for r in self.rows)


def _select_row(pool: CandidatePool, qc: QuestionCandidates, params) -> QuestionRow:
    ex = pool.example
    if not qc.candidates:
        return QuestionRow(ex.id, None, [], 0.0, 0.0, 0)
    scores = candidate_scores(qc.question, qc.candidates, params)
    i = select_index(scores, qc.candidates)
    predicted = answer_strings(pool.answers[i])
    return QuestionRow(ex.id, pool.graphs[i].to_line(), predicted,
                       answer_f1(predicted, ex.gold_answers), pool.ceiling, len(qc.candidates))


def report_from_pools(pools: Sequence[CandidatePool], kb: KnowledgeBase, params, config: PipelineConfig) -> RunReport:
    start = time.perf_counter()
    names = NameResolver(kb)
    rows = []
    for pool in pools:
        try:
            rows.append(_select_row(pool, pool.candidates(config.linearizer, names), params))
        except Exception as exc:  # per-question failures score 0
            log.warning("question %s failed: %s", pool.example.id, exc)
            rows.append(QuestionRow(pool.example.id, None, [], 0.0, pool.ceiling, len(pool.graphs), repr(exc)))
    return RunReport(rows, config.echo(), time.perf_counter() - start)


def run_pipeline(dataset: Sequence[QAExample], kb: KnowledgeBase, lexicon: Lexicon, params,
                 config: PipelineConfig | None = None) -> RunReport:
    """Generate, linearize, select, execute and score every question."""
    config = config or PipelineConfig()
    start = time.perf_counter()
    pools = build_pools(dataset, kb, lexicon, config)
    report = report_from_pools(pools, kb, params, config)
    report.timing = time.perf_counter() - start
    return report


def training_sets(pools: Sequence[CandidatePool], kb: KnowledgeBase, config: PipelineConfig):
    names = NameResolver(kb)
    tr = [p.candidates(config.linearizer, names) for p in pools if p.example.split == "train"]
    va = [p.candidates(config.linearizer, names) for p in pools if p.example.split == "validation"]
    return tr, va


def fit(pools: Sequence[CandidatePool], kb: KnowledgeBase, config: PipelineConfig):
    tr, va = training_sets(pools, kb, config)
    return train(tr, config.train, validation=va or None)


# --- ablations ---------------------------------------------------------------------------------

VARIANTS = {
    "all": LinearizerConfig(),
    "no-constraints": LinearizerConfig(include_constraints=False),
    "no-answer": LinearizerConfig(include_answer=False),
}


@dataclass(frozen=True)
class AblationConfig:
    strategy: str
    negatives: int
    variant: str = "all"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")


@dataclass
class AblationRow:
    strategy: str
    negatives: int
    variant: str
    val_f1: float
    test_f1: float
    ceiling: float
    report: RunReport

    def line(self) -> str:
        return (f"{self.strategy}\t{self.negatives}\t{self.variant}\t"
                f"{self.val_f1:.4f}\t{self.test_f1:.4f}\t{self.ceiling:.4f}")


ABLATION_HEADER = "strategy\tnegatives\tvariant\tval_f1\ttest_f1\tceiling"


def ablation_grid(strategies=STRATEGIES, negatives=(10,), variants=("all",)) -> list[AblationConfig]:
    return [AblationConfig(s, m, v) for v in variants for s in strategies for m in negatives]


def run_ablation(dataset: Sequence[QAExample], kb: KnowledgeBase, lexicon: Lexicon,
                 configs: Sequence[AblationConfig], base: PipelineConfig | None = None,
                 eval_split: str = "test") -> list[AblationRow]:
    base = base or PipelineConfig()
    pools = build_pools(dataset, kb, lexicon, base)
    eval_pools = [p for p in pools if p.example.split == eval_split]
    rows = []
    for ac in configs:
        cfg = replace(
            base,
            linearizer=VARIANTS[ac.variant],
            train=replace(base.train, strategy=ac.strategy, num_negatives=ac.negatives),
        )
        result = fit(pools, kb, cfg)
        report = report_from_pools(eval_pools, kb, result.params, cfg)
        val_f1 = max((m.val_f1 for m in result.metrics), default=float("nan"))
        rows.append(AblationRow(ac.strategy, ac.negatives, ac.variant, val_f1,
                                report.average_f1, report.generation_ceiling, report))
        log.info("ablation %s", rows[-1].line())
    return rows


def ablation_table(rows: Sequence[AblationRow]) -> str:
    return ABLATION_HEADER + "\n" + "".join(r.line() + "\n" for r in rows)
