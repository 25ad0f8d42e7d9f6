"""Ranking objectives over candidate scores.

All functions accept torch tensors (differentiable) and are wrapped by
float-returning helpers for scalar use. Logs are clamped at 1e-12:
``log(max(p, 1e-12))`` is computed as ``max(log p, log 1e-12)`` using the
numerically stable log-sigmoid / log-softmax forms.
"""

from __future__ import annotations

import math
from typing import Sequence

import torch
import torch.nn.functional as F

LOG_EPS = math.log(1e-12)
DEFAULT_MARGIN = 0.5


def _t(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(x, dtype=torch.float64)


def _clamped(logp: torch.Tensor) -> torch.Tensor:
    return torch.clamp(logp, min=LOG_EPS)


def sigmoid_norm_t(s: torch.Tensor) -> torch.Tensor:
    return torch.sigmoid(s)


def pointwise_loss_t(scores: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    log_p = _clamped(F.logsigmoid(scores))
    log_q = _clamped(F.logsigmoid(-scores))  # log(1 - sigmoid(s))
    return -(labels * log_p + (1 - labels) * log_q).sum()


def pairwise_loss_t(s_pos: torch.Tensor, s_neg: torch.Tensor, margin: float = DEFAULT_MARGIN) -> torch.Tensor:
    return torch.clamp(margin - torch.sigmoid(s_pos) + torch.sigmoid(s_neg), min=0.0)


def softmax_t(scores: torch.Tensor) -> torch.Tensor:
    return torch.softmax(scores, dim=-1)


def listwise_loss_t(scores: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Binary cross-entropy summed over softmax-normalized list scores.

    ``log(1 - p_i)`` is evaluated as ``logsumexp(s_j, j != i) - logsumexp(s)``.
    """
    n = scores.shape[-1]
    log_p = torch.log_softmax(scores, dim=-1)
    off_diag = scores.unsqueeze(-2).expand(*scores.shape[:-1], n, n)
    eye = torch.eye(n, dtype=torch.bool)
    log_rest = torch.logsumexp(off_diag.masked_fill(eye, float("-inf")), dim=-1)
    log_q = log_rest - torch.logsumexp(scores, dim=-1, keepdim=True)
    return -(labels * _clamped(log_p) + (1 - labels) * _clamped(log_q)).sum(-1)


# --- float wrappers -------------------------------------------------------------------

def sigmoid_norm(s: float) -> float:
    if not math.isfinite(s):
        raise ValueError("score must be finite")
    return float(sigmoid_norm_t(_t(s)))


def pointwise_loss(scores: Sequence[float], labels: Sequence[int]) -> float:
    if len(scores) != len(labels):
        raise ValueError(f"length mismatch: {len(scores)} scores vs {len(labels)} labels")
    if any(y not in (0, 1) for y in labels):
        raise ValueError("labels must be binary")
    return float(pointwise_loss_t(_t(list(scores)), _t(list(labels))))


def pairwise_loss(s_pos: float, s_neg: float, margin: float = DEFAULT_MARGIN) -> float:
    if not 0.0 < margin < 1.0:
        raise ValueError("margin must lie in (0, 1)")
    return float(pairwise_loss_t(_t(s_pos), _t(s_neg), margin))


def softmax(scores: Sequence[float]) -> list[float]:
    return softmax_t(_t(list(scores))).tolist()


def listwise_loss(scores: Sequence[float], labels: Sequence[int]) -> float:
    if len(scores) != len(labels):
        raise ValueError(f"length mismatch: {len(scores)} scores vs {len(labels)} labels")
    if len(scores) < 2:
        raise ValueError("a list needs at least one positive and one negative")
    if sum(labels) != 1 or any(y not in (0, 1) for y in labels):
        raise ValueError("list instance must have exactly one positive label")
    return float(listwise_loss_t(_t(list(scores)), _t(list(labels))))
