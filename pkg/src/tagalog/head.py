"""Fusion, hashtag scoring, ranking and the training losses."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autograd as ag
from .autograd import Tensor

PROB_FLOOR = 1e-12


@dataclass
class Prediction:
    y_pred: Tensor        # (..., |H|)
    ranked: np.ndarray    # (..., |H|) hashtag indices, best first

    def top(self, k: int) -> np.ndarray:
        return self.ranked[..., :k]


def fuse(t_graph, t_l) -> Tensor:
    """Concatenate graph embedding (first) and language-guided vector."""
    return ag.concat([ag.as_tensor(t_graph), ag.as_tensor(t_l)], axis=-1)


def rank(scores: np.ndarray) -> np.ndarray:
    """Descending order; ties go to the lower hashtag index."""
    return np.argsort(-np.asarray(scores), axis=-1, kind="stable")


def logits(t_f, W, b) -> Tensor:
    t_f = ag.as_tensor(t_f)
    squeeze = t_f.ndim == 1
    if squeeze:
        t_f = t_f.reshape(1, -1)
    out = t_f @ ag.as_tensor(W).T + b
    return out.reshape(-1) if squeeze else out


def predict(t_f, W, b, activation: str = "softmax") -> Prediction:
    z = logits(t_f, W, b)
    if activation == "softmax":
        y = ag.softmax(z, axis=-1)
    elif activation == "sigmoid":
        y = ag.sigmoid(z)
    else:
        raise ValueError(f"unknown head activation {activation!r}")
    return Prediction(y, rank(y.data))


def target_matrix(ground_truth: Sequence[Sequence[int]], n_tags: int) -> np.ndarray:
    Y = np.zeros((len(ground_truth), n_tags))
    for i, tags in enumerate(ground_truth):
        if not tags:
            raise ValueError(f"post {i} has an empty ground-truth hashtag set")
        Y[i, list(tags)] = 1.0
    return Y


def hr_loss(y_pred, ground_truth: Sequence[Sequence[int]]) -> Tensor:
    """Batch mean of sum_{g in G} -log P(g), with P floored at 1e-12."""
    y = ag.as_tensor(y_pred)
    if y.ndim == 1:
        y = y.reshape(1, -1)
    Y = target_matrix(ground_truth, y.shape[-1])
    nll = ag.log(ag.clamp_min(y, PROB_FLOOR)) * Y
    return -(nll.sum() / float(len(ground_truth)))


def bce_loss(y_pred, ground_truth: Sequence[Sequence[int]]) -> Tensor:
    """Per-label binary cross-entropy, summed over labels, batch mean."""
    y = ag.as_tensor(y_pred)
    if y.ndim == 1:
        y = y.reshape(1, -1)
    Y = target_matrix(ground_truth, y.shape[-1])
    pos = ag.log(ag.clamp_min(y, PROB_FLOOR)) * Y
    neg = ag.log(ag.clamp_min(1.0 - y, PROB_FLOOR)) * (1.0 - Y)
    return -((pos + neg).sum() / float(len(ground_truth)))


def total_loss(l_gae, l_hr) -> Tensor:
    return ag.add(l_gae, l_hr)
