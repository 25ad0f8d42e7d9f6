"""Training-instance construction, training loop and optimal-graph selection."""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import torch

from qgrank.encoder import (
    EncoderConfig,
    PairEncoder,
    SequencePair,
    Vocabulary,
    batch_loss,
    make_pair,
    score_pairs,
)
from qgrank.errors import NoParseError, NumericalError
from qgrank.graphs import QueryGraph, serialize
from qgrank.linearize import LinearSequence
from qgrank.losses import DEFAULT_MARGIN

log = logging.getLogger(__name__)

POSITIVE_F1 = 0.1
STRATEGIES = ("pointwise", "pairwise", "listwise")
_KIND = {"pointwise": "point", "pairwise": "pair", "listwise": "list"}


@dataclass(frozen=True)
class Candidate:
    graph: QueryGraph
    sequence: LinearSequence
    f1_vs_gold: float = 0.0

    @property
    def label(self) -> int:
        return int(self.f1_vs_gold > POSITIVE_F1)


@dataclass(frozen=True)
class TrainingInstance:
    kind: str  # "point" | "pair" | "list"
    members: tuple[Candidate, ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        if self.kind == "pair" and sorted(self.labels) != [0, 1]:
            raise ValueError("pair instance needs one positive and one negative")
        if self.kind == "list" and (self.labels[0] != 1 or any(self.labels[1:])):
            raise ValueError("list instance needs y0 = 1 and all other labels 0")


@dataclass
class QuestionCandidates:
    qid: str
    question: tuple[str, ...]
    candidates: list[Candidate]


@dataclass
class TrainConfig:
    strategy: str = "listwise"
    num_negatives: int = 10
    margin: float = DEFAULT_MARGIN
    epochs: int = 5
    seed: int = 0
    learning_rate: float = 5e-5
    batch_size: int = 8
    subsample_points: bool = False
    encoder: EncoderConfig = field(default_factory=EncoderConfig)

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.num_negatives < 1:
            raise ValueError("num_negatives must be >= 1")
        if not 0.0 < self.margin < 1.0:
            raise ValueError("margin must lie in (0, 1)")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def _sample(rng: np.random.Generator, pool: list, m: int) -> list:
    idx = rng.choice(len(pool), size=m, replace=len(pool) < m)
    return [pool[i] for i in idx]


def build_instances(
    candidates: Sequence[Candidate],
    strategy: str,
    m: int,
    seed=0,
    subsample_points: bool = False,
) -> list[TrainingInstance]:
    """Group one question's labeled candidates into point, pair or list instances.

    Negatives are drawn without replacement, or with replacement when fewer
    than ``m`` exist.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    rng = np.random.default_rng(seed)
    pos = [c for c in candidates if c.label == 1]
    neg = [c for c in candidates if c.label == 0]
    if strategy == "pointwise":
        if not subsample_points:
            return [TrainingInstance("point", (c,), (c.label,)) for c in candidates]
        chosen = list(pos)
        if neg:
            for _ in pos:
                chosen += _sample(rng, neg, m)
        return [TrainingInstance("point", (c,), (c.label,)) for c in chosen]
    if not pos or not neg:
        return []
    out = []
    for p in pos:
        negs = _sample(rng, neg, m)
        if strategy == "pairwise":
            out += [TrainingInstance("pair", (p, n), (1, 0)) for n in negs]
        else:
            out.append(TrainingInstance("list", (p, *negs), (1,) + (0,) * len(negs)))
    return out


# --- scoring and selection -------------------------------------------------------------

Scorer = Callable[[Sequence[str], Sequence[Candidate]], Sequence[float]]


def candidate_scores(question: Sequence[str], candidates: Sequence[Candidate], params) -> np.ndarray:
    if isinstance(params, PairEncoder):
        pairs = [params.pair(question, c.sequence) for c in candidates]
        return score_pairs(pairs, params)
    return np.asarray(params(question, candidates), dtype=np.float64)


def select_index(scores: Sequence[float], candidates: Sequence[Candidate]) -> int:
    """Argmax of scores; ties go to the lowest canonical serialization."""
    return min(range(len(candidates)), key=lambda i: (-scores[i], serialize(candidates[i].graph)))


def select_best(question: Sequence[str], candidates: Sequence[Candidate], params) -> QueryGraph:
    if not candidates:
        raise NoParseError("no parse: candidate set is empty")
    scores = candidate_scores(question, candidates, params)
    return candidates[select_index(scores, candidates)].graph


# --- training -----------------------------------------------------------------------------

@dataclass
class EpochMetrics:
    epoch: int
    strategy: str
    train_loss: float
    val_f1: float
    val_top1: float

    def line(self) -> str:
        return f"{self.epoch}\t{self.strategy}\t{self.train_loss:.6f}\t{self.val_f1:.6f}"


@dataclass
class TrainResult:
    params: PairEncoder
    metrics: list[EpochMetrics]
    best_epoch: int

    def metrics_log(self) -> str:
        return "".join(m.line() + "\n" for m in self.metrics)


def build_vocabulary(data: Sequence[QuestionCandidates]) -> Vocabulary:
    tokens = set()
    for qc in data:
        tokens.update(qc.question)
        for c in qc.candidates:
            tokens.update(c.sequence.tokens)
    return Vocabulary(tokens)


def evaluate(data: Sequence[QuestionCandidates], params) -> tuple[float, float]:
    """(average F1 of the selected candidate, fraction with a positive ranked first)."""
    if not data:
        return 0.0, 0.0
    f1s, top1 = [], []
    for qc in data:
        if not qc.candidates:
            f1s.append(0.0)
            top1.append(0.0)
            continue
        scores = candidate_scores(qc.question, qc.candidates, params)
        best = qc.candidates[select_index(scores, qc.candidates)]
        f1s.append(best.f1_vs_gold)
        top1.append(float(best.label))
    return float(np.mean(f1s)), float(np.mean(top1))


def _instance_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, 0, index])


def train(
    train_set: Sequence[QuestionCandidates],
    config: TrainConfig | None = None,
    params: PairEncoder | None = None,
    validation: Sequence[QuestionCandidates] | None = None,
) -> TrainResult:
    config = config or TrainConfig()
    config.validate()
    if not train_set:
        raise ValueError("training set is empty")
    torch.manual_seed(config.seed)
    if params is None:
        params = PairEncoder(build_vocabulary(train_set), replace(config.encoder, seed=config.seed))
    params.seed_dropout(config.seed)
    kind = _KIND[config.strategy]

    pair_cache: dict[tuple, SequencePair] = {}

    def pair_of(question, cand):
        key = (question, cand.sequence.tokens)
        if key not in pair_cache:
            pair_cache[key] = make_pair(question, cand.sequence, params.config.max_len)
        return pair_cache[key]

    instances = []
    for qi, qc in enumerate(train_set):
        for inst in build_instances(qc.candidates, config.strategy, config.num_negatives,
                                    _instance_seed(config.seed, qi), config.subsample_points):
            instances.append(([pair_of(qc.question, c) for c in inst.members], inst.labels))
    if not instances:
        raise ValueError("no training instances: need questions with both positive and negative candidates")

    opt = torch.optim.Adam(params.parameters(), lr=config.learning_rate, betas=(0.9, 0.999))
    rng = np.random.default_rng([config.seed, 1])
    metrics: list[EpochMetrics] = []
    best_state, best_f1, best_epoch = None, -math.inf, config.epochs
    for epoch in range(1, config.epochs + 1):
        params.train()
        order = rng.permutation(len(instances))
        total, steps = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            groups = [instances[i] for i in order[start:start + config.batch_size]]
            opt.zero_grad()
            loss = batch_loss(params, groups, kind, config.margin)
            if not torch.isfinite(loss):
                raise NumericalError(f"non-finite training loss at epoch {epoch}, step {steps}: {loss.item()}")
            loss.backward()
            opt.step()
            total += loss.item()
            steps += 1
        params.eval()
        val_f1, val_top1 = evaluate(validation, params) if validation else (float("nan"), float("nan"))
        metrics.append(EpochMetrics(epoch, config.strategy, total / steps, val_f1, val_top1))
        log.info("epoch %d %s loss=%.4f val_f1=%.4f", epoch, config.strategy, total / steps, val_f1)
        if validation and val_f1 > best_f1:
            best_f1, best_epoch = val_f1, epoch
            best_state = copy.deepcopy(params.state_dict())
    if best_state is not None:
        params.load_state_dict(best_state)
    params.eval()
    return TrainResult(params, metrics, best_epoch)

