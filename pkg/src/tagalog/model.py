"""End-to-end forward pass: token matrices -> attention -> graph autoencoder
-> hashtag scores, for training (transductive over the training graph) and
for inference on unseen posts (inductive attachment)."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autograd as ag
from .attention import AttnParams, lga, mean_pool, uga, word_attention_pool
from .autograd import Tensor
from .config import TrainConfig
from .corpus import CleanPost, Vocab
from .encoder import EmbeddingProvider, encode_tokens, init_table, make_provider, pad_mask, tokenize
from .gae import decode, gae_loss, layer_shapes, sage_layer, target_adjacency
from .graph import GraphConfig, HeteroGraph, attach_post, build_graph
from .head import bce_loss, fuse, hr_loss, predict, rank, total_loss
from .params import ParamStore, init_weight

logger = logging.getLogger(__name__)


@dataclass
class Batch:
    tokens: np.ndarray   # (N, S', D), trailing all-PAD columns trimmed
    mask: np.ndarray     # (N, S')
    lang: np.ndarray     # language vocab index per post
    user: np.ndarray     # user vocab index per post, -1 if unknown


@dataclass
class ForwardResult:
    loss: Tensor
    l_gae: Tensor
    l_hr: Tensor
    y_pred: Tensor


def graph_config(cfg: TrainConfig) -> GraphConfig:
    return GraphConfig(cfg.sim_threshold, cfg.topk, cfg.exact_paper_graph)


def init_params(cfg: TrainConfig, vocab: Vocab) -> ParamStore:
    D, G, H = cfg.embed_dim, cfg.graph_dim, len(vocab.hashtags)
    store = ParamStore()
    store.add("emb.lang", init_table(vocab.languages, D, cfg.seed))
    store.add("emb.user", init_table(vocab.users, D, cfg.seed))
    for branch in ("l", "u", "w"):
        store.add(f"attn.W_{branch}", init_weight(f"attn.W_{branch}", (D, D), D, cfg.seed))
        store.add(f"attn.b_{branch}", np.zeros(D))
    store.add("attn.c_w", init_weight("attn.c_w", (D,), D, cfg.seed))
    if cfg.use_graph:
        for k, (d_out, d_in) in enumerate(layer_shapes(D, G, cfg.gae_layers), start=1):
            store.add(f"gae.W{k}", init_weight(f"gae.W{k}", (d_out, 2 * d_in), 2 * d_in, cfg.seed))
            store.add(f"gae.b{k}", np.zeros(d_out))
    fused = (G if cfg.use_graph else D) + D
    store.add("head.W", init_weight("head.W", (H, fused), fused, cfg.seed))
    store.add("head.b", np.zeros(H))
    return store


class TagalogModel:
    """Holds config, vocabulary, parameters and the frozen training graph."""

    def __init__(self, cfg: TrainConfig, vocab: Vocab, train_posts: Sequence[CleanPost],
                 provider: EmbeddingProvider | None = None, store: ParamStore | None = None,
                 graph: HeteroGraph | None = None):
        if not train_posts:
            raise ValueError("training split is empty")
        if len(vocab.hashtags) < 2:
            raise ValueError("need at least two hashtags")
        self.cfg = cfg
        self.vocab = vocab
        self.train_posts = list(train_posts)
        self.provider = provider or make_provider(cfg.embed_dim, cfg.seed, cfg.embed_file)
        self.store = store or init_params(cfg, vocab)
        self.attn = AttnParams.from_store(self.store)
        self.train_batch = self.make_batch(self.train_posts)
        self.gcfg = graph_config(cfg)
        self.graph = None
        if cfg.use_graph:
            self._prepare_user_pooling()
            if graph is None:
                tweet_feats, user_feats = self._node_features(self.train_batch)
                graph = build_graph(self.train_posts, tweet_feats.data, None, self.gcfg,
                                    n_users=len(vocab.users))
                graph.features[graph.n_tweets:] = user_feats.data
            self.graph = graph
            self._agg = graph.aggregation_matrix(unweighted=cfg.unweighted_mean)
            self._target = target_adjacency(graph)

    # ------------------------------------------------------------------ inputs
    def make_batch(self, posts: Sequence[CleanPost]) -> Batch:
        cfg = self.cfg
        seqs = [tokenize(p.token_text, cfg.seq_len) for p in posts]
        mask = np.stack([pad_mask(s) for s in seqs])
        width = int(mask.sum(axis=1).max())
        tokens = np.stack([encode_tokens(s[:width], self.provider, cfg.embed_dim) for s in seqs])
        lang = np.array([self.vocab.lang_index(p.lang) for p in posts], dtype=np.int64)
        user = np.array([p.user_index if 0 <= p.user_index < len(self.vocab.users) else -1
                         for p in posts], dtype=np.int64)
        return Batch(tokens, mask[:, :width], lang, user)

    def _user_vectors(self, users: np.ndarray):
        table = self.store["emb.user"]
        known = users >= 0
        if known.all():
            return table[users]
        rows = table[np.where(known, users, 0)]
        return rows * known[:, None].astype(np.float64)

    def _prepare_user_pooling(self):
        users = sorted({p.user_index for p in self.train_posts})
        pos = {u: k for k, u in enumerate(users)}
        M = np.zeros((len(users), len(self.train_posts)))
        for i, p in enumerate(self.train_posts):
            M[pos[p.user_index], i] = 1.0
        self._user_pool = M / M.sum(axis=1, keepdims=True)
        self._graph_users = np.array(users, dtype=np.int64)

    # ---------------------------------------------------------------- pieces
    def _tweet_feature(self, b: Batch) -> Tensor:
        if self.cfg.use_word_attention:
            return word_attention_pool(b.tokens, self.attn, b.mask)
        return mean_pool(b.tokens, b.mask)

    def _language_vector(self, b: Batch) -> Tensor:
        if self.cfg.use_lga:
            l_f = self.store["emb.lang"][b.lang]
            return lga(b.tokens, l_f, self.attn, b.mask).pooled
        return mean_pool(b.tokens, b.mask)

    def _user_guided(self, b: Batch) -> Tensor:
        if self.cfg.use_uga:
            u_f = self._user_vectors(b.user)
            return uga(b.tokens, u_f, self.attn, b.mask, pool_hl=self.cfg.uga_pool_hl).pooled
        return mean_pool(b.tokens, b.mask)

    def _node_features(self, b: Batch) -> tuple[Tensor, Tensor]:
        """Tweet rows and user rows (graph user order) of the feature matrix."""
        tweets = self._tweet_feature(b)
        if self.cfg.user_node_init == "mean-uga":
            users = ag.matmul(self._user_pool, self._user_guided(b))
        else:
            users = self.store["emb.user"][self._graph_users]
        return tweets, users

    def _layers(self) -> list[tuple[Tensor, Tensor]]:
        return [(self.store[f"gae.W{k}"], self.store[f"gae.b{k}"])
                for k in range(1, self.cfg.gae_layers + 1)]

    def _graph_states(self, F) -> list[Tensor]:
        """Per-layer node states over the training graph, input layer first."""
        states = [ag.as_tensor(F)]
        layers = self._layers()
        for k, (W, b) in enumerate(layers):
            normalize = self.cfg.l2_normalize and k < len(layers) - 1
            states.append(sage_layer(states[-1], self._agg, W, b, normalize=normalize))
        return states

    def _score(self, t_graph, t_l):
        t_f = fuse(t_graph, t_l)
        return predict(t_f, self.store["head.W"], self.store["head.b"], activation=self.cfg.head)

    # --------------------------------------------------------------- training
    def forward(self) -> ForwardResult:
        """Full-batch training forward pass; returns the joint loss."""
        b = self.train_batch
        t_l = self._language_vector(b)
        if self.cfg.use_graph:
            tweets, users = self._node_features(b)
            F = ag.concat([tweets, users], axis=0)
            Z = self._graph_states(F)[-1]
            t_graph = Z[: len(self.train_posts)]
            l_gae = gae_loss(self._target, decode(Z), reduction=self.cfg.gae_loss)
        else:
            t_graph = self._tweet_feature(b)
            l_gae = Tensor(0.0)
        pred = self._score(t_graph, t_l)
        truth = [sorted(p.tag_indices) for p in self.train_posts]
        l_hr = hr_loss(pred.y_pred, truth) if self.cfg.head == "softmax" else bce_loss(pred.y_pred, truth)
        return ForwardResult(total_loss(l_gae, l_hr), l_gae, l_hr, pred.y_pred)

    # -------------------------------------------------------------- inference
    def infer(self, posts: Sequence[CleanPost]) -> np.ndarray:
        """Hashtag scores (len(posts), |H|) for posts outside the training graph."""
        if not posts:
            return np.zeros((0, len(self.vocab.hashtags)))
        b = self.make_batch(posts)
        t_l = self._language_vector(b).data
        feats = self._tweet_feature(b).data
        if not self.cfg.use_graph:
            return self._score(feats, t_l).y_pred.data
        g = self.graph
        tweets, users = self._node_features(self.train_batch)
        states = [s.data for s in self._graph_states(ag.concat([tweets, users], axis=0))]

        # weights over [training nodes | one fresh author slot per post]
        n_posts, V = len(posts), g.n_nodes
        Q = np.zeros((n_posts, V + n_posts))
        new_author = np.zeros(n_posts, dtype=bool)
        for i, post in enumerate(posts):
            hood = attach_post(g, post, feats[i], self.gcfg, tweet_feats=states[0][: g.n_tweets])
            for row, w in zip(hood.rows, hood.weights):
                Q[i, row if row >= 0 else V + i] = w
            new_author[i] = hood.new_author
        denom = np.abs(Q).sum(axis=1, keepdims=True)
        Q = Q / denom
        if self.cfg.user_node_init == "mean-uga":
            author0 = self._user_guided(b).data
        else:
            author0 = self._user_vectors(b.user).data

        h_post, h_author = feats, author0
        layers = self._layers()
        for k, (W, bias) in enumerate(layers):
            W, bias = W.data, bias.data
            m = Q @ np.concatenate([states[k], h_author], axis=0)
            h_post = np.tanh(np.concatenate([h_post, m], axis=1) @ W.T + bias)
            h_author = np.tanh(np.concatenate([h_author, np.zeros_like(h_author)], axis=1) @ W.T + bias)
            if self.cfg.l2_normalize and k < len(layers) - 1:
                h_post = h_post / np.sqrt((h_post ** 2).sum(axis=1, keepdims=True) + 1e-12)
                h_author = h_author / np.sqrt((h_author ** 2).sum(axis=1, keepdims=True) + 1e-12)
        return self._score(h_post, t_l).y_pred.data

    def recommend(self, posts: Sequence[CleanPost], k: int) -> list[list[tuple[int, float]]]:
        scores = self.infer(posts)
        order = rank(scores)[:, :k]
        return [[(int(j), float(scores[i, j])) for j in row] for i, row in enumerate(order)]
