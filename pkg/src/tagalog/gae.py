"""GraphSAGE mean-aggregator encoder, inner-product decoder and the
reconstruction loss."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .graph import HeteroGraph


def sage_layer(H_in, agg, W, b, normalize: bool = False) -> Tensor:
    """One layer: h_v = tanh(W [h_v ; mean_w(h_u, u in N(v))] + b).

    ``agg`` is either a :class:`HeteroGraph` or its precomputed
    neighbour-averaging matrix. ``W`` has shape (D_out, 2 * D_in).
    """
    if isinstance(agg, HeteroGraph):
        agg = agg.aggregation_matrix()
    H = ag.as_tensor(H_in)
    M = ag.matmul(agg, H)
    out = ag.tanh(ag.concat([H, M], axis=-1) @ ag.as_tensor(W).T + b)
    if normalize:
        out = ag.l2_normalize(out, axis=-1)
    return out


def encode(features, agg, layers: Sequence[tuple], normalize: bool = False) -> Tensor:
    """Stack ``sage_layer`` over ``layers`` = [(W1, b1), (W2, b2), ...]."""
    if not layers:
        raise ValueError("the encoder needs at least one layer")
    if isinstance(agg, HeteroGraph):
        agg = agg.aggregation_matrix()
    H = ag.as_tensor(features)
    for k, (W, b) in enumerate(layers):
        H = sage_layer(H, agg, W, b, normalize=normalize and k < len(layers) - 1)
    return H


def decode(Z) -> Tensor:
    """Reconstructed adjacency sigmoid(Z Z^T)."""
    Z = ag.as_tensor(Z)
    return ag.sigmoid(Z @ Z.T)


def target_adjacency(graph: HeteroGraph) -> np.ndarray:
    """Edge weights off the diagonal, ones on it."""
    return graph.adjacency(diagonal=1.0)


def gae_loss(A_target, A_hat, reduction: str = "mean") -> Tensor:
    diff = ag.sub(A_hat, np.asarray(A_target, dtype=np.float64))
    sq = ag.square(diff)
    if reduction == "mean":
        return sq.mean()
    if reduction == "sum":
        return sq.sum()
    raise ValueError(f"unknown reduction {reduction!r}")


def layer_shapes(in_dim: int, out_dim: int, n_layers: int) -> list[tuple[int, int]]:
    """(D_out, D_in) per layer; the first layer maps in_dim, the rest out_dim."""
    dims = [in_dim] + [out_dim] * n_layers
    return [(dims[k + 1], dims[k]) for k in range(n_layers)]
