"""Sequence-pair encoder and linear scorer.

A question and a linearized graph are packed as
``[CLS] question [SEP] graph [SEP]`` with segment ids 0/1, run through a
small stack of single-head self-attention blocks, and the state at the
``[CLS]`` position is the pair representation. A linear layer maps it to a
score.
"""

from __future__ import annotations

import math
import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from qgrank import textio
from qgrank.errors import DataError, NumericalError
from qgrank.linearize import ANSWER_SLOT, SEPARATORS, LinearSequence

CLS = "[CLS]"
SEP = "[SEP]"
PAD = "[PAD]"
OOV = "[OOV]"
SPECIAL_TOKENS = (PAD, OOV, CLS, SEP, ANSWER_SLOT) + SEPARATORS

LN_EPS = 1e-5
CHECKPOINT_MAGIC = b"QGRK"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class SequencePair:
    tokens: tuple[str, ...]
    segments: tuple[int, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.segments):
            raise ValueError("tokens and segments differ in length")
        if not self.tokens or self.tokens[0] != CLS or self.tokens.count(CLS) != 1 or self.tokens.count(SEP) != 2:
            raise ValueError("pair must have one leading [CLS] and exactly two [SEP]")

    def __len__(self):
        return len(self.tokens)


def make_pair(question: Sequence[str], seq: LinearSequence | Sequence[str], max_len: int = 128) -> SequencePair:
    """Pack a question and a graph sequence; the graph side is truncated first."""
    q = [t for t in question]
    g = list(seq.tokens if isinstance(seq, LinearSequence) else seq)
    if not q:
        raise ValueError("empty question")
    if not g:
        raise ValueError("empty graph sequence")
    if max_len < 5:
        raise ValueError("max_len must be at least 5")
    budget = max_len - 3
    if len(q) > budget - 1:
        q = q[:budget - 1]
    g = g[:budget - len(q)]
    tokens = (CLS, *q, SEP, *g, SEP)
    segments = (0,) * (len(q) + 2) + (1,) * (len(g) + 1)
    return SequencePair(tokens, segments)


class Vocabulary:
    """Token -> index map built from the sorted token set (insertion order is irrelevant)."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.itos = sorted(set(tokens) | set(SPECIAL_TOKENS))
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        self.oov = self.stoi[OOV]
        self.pad = self.stoi[PAD]

    def __len__(self):
        return len(self.itos)

    def __contains__(self, tok):
        return tok in self.stoi

    def index(self, tok: str) -> int:
        return self.stoi.get(tok, self.oov)

    def save(self, path) -> None:
        Path(path).write_text("".join(t + "\n" for t in self.itos), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        try:
            tokens = textio.lines(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DataError(f"cannot read vocabulary: {exc}", path=path) from exc
        return cls(tokens)


@dataclass
class EncoderConfig:
    dim: int = 64
    depth: int = 2
    max_len: int = 128
    dropout: float = 0.1
    use_positions: bool = True
    init_scale: float = 0.05
    seed: int = 0


class AttentionBlock(nn.Module):
    def __init__(self, d: int):
        super().__init__()
        self.q = nn.Linear(d, d)
        self.k = nn.Linear(d, d)
        self.v = nn.Linear(d, d)
        self.o = nn.Linear(d, d)
        self.ln1 = nn.LayerNorm(d, eps=LN_EPS)
        self.ff1 = nn.Linear(d, d)
        self.ff2 = nn.Linear(d, d)
        self.ln2 = nn.LayerNorm(d, eps=LN_EPS)

    def forward(self, x, key_mask, drop):
        d = x.shape[-1]
        att = self.q(x) @ self.k(x).transpose(-1, -2) / math.sqrt(d)
        att = att.masked_fill(~key_mask[:, None, :], float("-inf"))
        h = self.o(torch.softmax(att, dim=-1) @ self.v(x))
        x = self.ln1(x + drop(h))
        h = self.ff2(torch.tanh(self.ff1(x)))
        return self.ln2(x + drop(h))


class PairEncoder(nn.Module):
    """Parameters and forward pass; ``forward`` returns scores, ``represent`` the [CLS] state."""

    def __init__(self, vocab: Vocabulary, config: EncoderConfig | None = None):
        super().__init__()
        self.vocab = vocab
        self.config = config = config or EncoderConfig()
        d = config.dim
        self.tok = nn.Embedding(len(vocab), d)
        self.pos = nn.Embedding(config.max_len, d)
        self.seg = nn.Embedding(2, d)
        self.blocks = nn.ModuleList(AttentionBlock(d) for _ in range(config.depth))
        self.out = nn.Linear(d, 1)
        self.to(torch.float64)
        self.reset_parameters(config.seed)
        self._dropout_gen: torch.Generator | None = None

    def reset_parameters(self, seed: int) -> None:
        gen = torch.Generator().manual_seed(seed)
        s = self.config.init_scale
        with torch.no_grad():
            for name, p in self.named_parameters():
                if name.endswith("ln1.weight") or name.endswith("ln2.weight"):
                    p.fill_(1.0)
                elif name.endswith("ln1.bias") or name.endswith("ln2.bias"):
                    p.zero_()
                else:
                    p.copy_(torch.rand(p.shape, generator=gen, dtype=p.dtype) * 2 * s - s)

    def seed_dropout(self, seed: int) -> None:
        self._dropout_gen = torch.Generator().manual_seed(seed)

    def _drop(self, x):
        p = self.config.dropout
        if not self.training or p <= 0:
            return x
        if self._dropout_gen is None:
            self.seed_dropout(self.config.seed)
        keep = torch.rand(x.shape, generator=self._dropout_gen, dtype=x.dtype) >= p
        return x * keep / (1.0 - p)

    def batch(self, pairs: Sequence[SequencePair]):
        n = max(len(p) for p in pairs)
        ids = torch.full((len(pairs), n), self.vocab.pad, dtype=torch.long)
        seg = torch.zeros((len(pairs), n), dtype=torch.long)
        mask = torch.zeros((len(pairs), n), dtype=torch.bool)
        for i, p in enumerate(pairs):
            if len(p) > self.config.max_len:
                raise ValueError(f"pair of length {len(p)} exceeds max_len {self.config.max_len}")
            ids[i, :len(p)] = torch.tensor([self.vocab.index(t) for t in p.tokens])
            seg[i, :len(p)] = torch.tensor(p.segments)
            mask[i, :len(p)] = True
        return ids, seg, mask

    def represent(self, pairs: Sequence[SequencePair]) -> torch.Tensor:
        ids, seg, mask = self.batch(pairs)
        x = self.tok(ids) + self.seg(seg)
        if self.config.use_positions:
            x = x + self.pos(torch.arange(ids.shape[1]))[None]
        x = self._drop(x)
        for block in self.blocks:
            x = block(x, mask, self._drop)
        return x[:, 0]

    def forward(self, pairs: Sequence[SequencePair]) -> torch.Tensor:
        return self.out(self.represent(pairs)).squeeze(-1)

    def pair(self, question, seq) -> SequencePair:
        return make_pair(question, seq, self.config.max_len)

    # checkpoint ------------------------------------------------------------------
    def save(self, path) -> None:
        """Binary checkpoint plus a ``.vocab`` sidecar.

        Layout: magic, then little-endian uint32 version, dim, depth, vocab
        size, max_len, use_positions; then every parameter tensor in
        ``state_dict`` order as float64 row-major data.
        """
        path = Path(path)
        c = self.config
        header = CHECKPOINT_MAGIC + struct.pack(
            "<6I", CHECKPOINT_VERSION, c.dim, c.depth, len(self.vocab), c.max_len, int(c.use_positions)
        )
        blocks = [t.detach().cpu().numpy().astype("<f8").tobytes(order="C") for t in self.state_dict().values()]
        path.write_bytes(header + b"".join(blocks))
        self.vocab.save(vocab_path(path))

    @classmethod
    def load(cls, path, config: EncoderConfig | None = None) -> "PairEncoder":
        path = Path(path)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise DataError(f"cannot read checkpoint: {exc}", path=path) from exc
        if data[:4] != CHECKPOINT_MAGIC or len(data) < 28:
            raise DataError("not a checkpoint file", path=path)
        version, dim, depth, vsize, max_len, use_pos = struct.unpack("<6I", data[4:28])
        if version != CHECKPOINT_VERSION:
            raise DataError(f"unsupported checkpoint version {version}", path=path)
        vocab = Vocabulary.load(vocab_path(path))
        if len(vocab) != vsize:
            raise DataError(f"vocabulary size {len(vocab)} does not match header {vsize}", path=path)
        base = asdict(config) if config else {}
        base.update(dim=dim, depth=depth, max_len=max_len, use_positions=bool(use_pos))
        model = cls(vocab, EncoderConfig(**base))
        offset = 28
        state = model.state_dict()
        for name, t in state.items():
            nbytes = t.numel() * 8
            chunk = data[offset:offset + nbytes]
            if len(chunk) != nbytes:
                raise DataError(f"truncated checkpoint at {name}", path=path)
            state[name] = torch.from_numpy(np.frombuffer(chunk, dtype="<f8").reshape(t.shape).copy())
            offset += nbytes
        if offset != len(data):
            raise DataError("trailing bytes in checkpoint", path=path)
        model.load_state_dict(state)
        return model


def vocab_path(checkpoint) -> Path:
    checkpoint = Path(checkpoint)
    return checkpoint.with_name(checkpoint.name + ".vocab")


def encode(pair: SequencePair, params: PairEncoder) -> np.ndarray:
    was = params.training
    params.eval()
    with torch.no_grad():
        f = params.represent([pair])[0].numpy().copy()
    params.train(was)
    return f


def score(f, params: PairEncoder) -> float:
    w = params.out.weight.detach().numpy()[0]
    b = float(params.out.bias.detach()[0])
    return float(np.dot(w, np.asarray(f, dtype=np.float64)) + b)


def score_pairs(pairs: Sequence[SequencePair], params: PairEncoder, batch_size: int = 64) -> np.ndarray:
    was = params.training
    params.eval()
    out = []
    with torch.no_grad():
        for i in range(0, len(pairs), batch_size):
            out.append(params(pairs[i:i + batch_size]).numpy())
    params.train(was)
    return np.concatenate(out) if out else np.zeros(0)


# --- losses over instance groups ----------------------------------------------------------

LOSS_KINDS = ("point", "pair", "list")


def group_loss(scores: torch.Tensor, sizes: Sequence[int], labels: torch.Tensor, kind: str, margin: float = 0.5) -> torch.Tensor:
    """Mean loss over consecutive groups of ``scores`` (one group per instance)."""
    from qgrank.losses import listwise_loss_t, pairwise_loss_t, pointwise_loss_t

    if kind not in LOSS_KINDS:
        raise ValueError(f"loss kind must be one of {LOSS_KINDS}")
    losses = []
    start = 0
    for n in sizes:
        s, y = scores[start:start + n], labels[start:start + n]
        start += n
        if kind == "point":
            losses.append(pointwise_loss_t(s, y))
        elif kind == "pair":
            pos = int(torch.argmax(y))
            losses.append(pairwise_loss_t(s[pos], s[1 - pos], margin))
        else:
            losses.append(listwise_loss_t(s, y))
    return torch.stack(losses).mean()


def batch_loss(params: PairEncoder, groups, kind: str, margin: float = 0.5) -> torch.Tensor:
    """``groups`` is a sequence of (pairs, labels) tuples, one per training instance."""
    pairs = [p for ps, _ in groups for p in ps]
    labels = torch.tensor([float(y) for _, ys in groups for y in ys], dtype=torch.float64)
    sizes = [len(ps) for ps, _ in groups]
    return group_loss(params(pairs), sizes, labels, kind, margin)


def gradients(groups, kind: str, params: PairEncoder, margin: float = 0.5) -> dict[str, np.ndarray]:
    """Analytic gradient of the mean instance loss w.r.t. every parameter."""
    params.zero_grad()
    loss = batch_loss(params, groups, kind, margin)
    if not torch.isfinite(loss):
        raise NumericalError(f"non-finite {kind} loss {float(loss)}")
    loss.backward()
    return {
        name: (p.grad.detach().numpy().copy() if p.grad is not None else np.zeros(p.shape))
        for name, p in params.named_parameters()
    }
