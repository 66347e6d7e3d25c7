"""Guided attention pooling over token matrices.

All functions accept numpy arrays or :class:`~tagalog.autograd.Tensor`
inputs with arbitrary leading batch dimensions: token matrices are
``(..., S, D)``, guide vectors ``(..., D)`` and masks ``(..., S)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import Tensor


@dataclass
class AttnOutput:
    weights: Tensor  # (..., S)
    pooled: Tensor   # (..., D)
    hidden: Tensor   # (..., S, D)


@dataclass
class AttnParams:
    W_l: Tensor
    b_l: Tensor
    W_u: Tensor
    b_u: Tensor
    W_w: Tensor
    b_w: Tensor
    c_w: Tensor

    @classmethod
    def from_store(cls, store) -> "AttnParams":
        return cls(**{k: store[f"attn.{k}"] for k in cls.__dataclass_fields__})


def _check_mask(mask) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any(axis=-1).all():
        raise ValueError("attention needs at least one unmasked position per post")
    return mask


def guided_attention(tokens, guide, W, b, mask, pool_hidden=None) -> AttnOutput:
    """tanh projection, dot-product scores against ``guide``, masked softmax,
    weighted sum of hidden rows (or of ``pool_hidden`` when given)."""
    mask = _check_mask(mask)
    tokens, guide = ag.as_tensor(tokens), ag.as_tensor(guide)
    hidden = ag.tanh(tokens @ W + b)
    g = guide.reshape(guide.shape[:-1] + (1, guide.shape[-1]))
    logits = (hidden * g).sum(axis=-1)
    weights = ag.masked_softmax(logits, mask, axis=-1)
    source = hidden if pool_hidden is None else pool_hidden
    w = weights.reshape(weights.shape + (1,))
    pooled = (w * source).sum(axis=-2)
    return AttnOutput(weights, pooled, hidden)


def lga(T_f, l_f, params: AttnParams, mask) -> AttnOutput:
    """Language-guided attention."""
    return guided_attention(T_f, l_f, params.W_l, params.b_l, mask)


def uga(T_f, u_f, params: AttnParams, mask, pool_hl: bool = False) -> AttnOutput:
    """User-guided attention.

    With ``pool_hl`` the user weights pool the language-branch hidden rows
    instead of the user-branch ones.
    """
    pool_hidden = ag.tanh(ag.as_tensor(T_f) @ params.W_l + params.b_l) if pool_hl else None
    return guided_attention(T_f, u_f, params.W_u, params.b_u, mask, pool_hidden)


def word_attention_pool(T_f, params: AttnParams, mask) -> Tensor:
    """Word-level attention with a learned context vector; returns pooled rows."""
    T = ag.as_tensor(T_f)
    lead = T.shape[:-2]
    c = params.c_w if not lead else ag.mul(params.c_w, np.ones(lead + (1,)))
    return guided_attention(T, c, params.W_w, params.b_w, mask).pooled


def mean_pool(T_f, mask) -> Tensor:
    """Masked mean of raw token rows (the no-attention baseline)."""
    mask = _check_mask(mask)
    m = mask.astype(np.float64)
    denom = m.sum(axis=-1, keepdims=True)
    T = ag.as_tensor(T_f)
    return (T * (m / denom)[..., None]).sum(axis=-2)
