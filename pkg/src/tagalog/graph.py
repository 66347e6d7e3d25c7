"""Heterogeneous user-tweet graph with family-gated similarity edges."""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .corpus import CleanPost
from .errors import DataError
from .hashing import SplitMix64, splitmix64_block, u64_to_signed_unit
from .langid import LANG_CODES, family_of

TWEET = "tweet"
USER = "user"


class NodeId(NamedTuple):
    kind: str
    index: int

    def __str__(self):
        return f"{self.kind}:{self.index}"


@dataclass
class GraphConfig:
    sim_threshold: float = 0.5
    topk: int | None = 10
    exact_paper_mode: bool = False

    def __post_init__(self):
        if self.exact_paper_mode:
            self.sim_threshold = -1.0
            self.topk = None
        elif self.topk is not None and self.topk < 1:
            raise ValueError("topk must be >= 1")


@dataclass
class HeteroGraph:
    """Tweets occupy node rows 0..n_tweets-1, users follow in ascending
    vocabulary order. ``edges`` maps (a, b) with a < b to the edge weight."""
    tweet_ids: list[str]
    tweet_users: np.ndarray      # user vocab index per tweet
    tweet_families: list[str]
    user_indices: np.ndarray     # user vocab index per user node
    edges: dict[tuple[int, int], float]
    features: np.ndarray | None = None
    _user_row: dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._user_row = {int(u): self.n_tweets + k for k, u in enumerate(self.user_indices)}

    @property
    def n_tweets(self) -> int:
        return len(self.tweet_ids)

    @property
    def n_users(self) -> int:
        return len(self.user_indices)

    @property
    def n_nodes(self) -> int:
        return self.n_tweets + self.n_users

    def node_id(self, row: int) -> NodeId:
        if row < self.n_tweets:
            return NodeId(TWEET, row)
        return NodeId(USER, int(self.user_indices[row - self.n_tweets]))

    def row_of(self, node: NodeId) -> int:
        if node.kind == TWEET:
            return node.index
        return self._user_row[node.index]

    def user_row(self, user_index: int) -> int | None:
        return self._user_row.get(int(user_index))

    def neighbors(self, row: int) -> dict[int, float]:
        out = {}
        for (a, b), w in self.edges.items():
            if a == row:
                out[b] = w
            elif b == row:
                out[a] = w
        return out

    def adjacency(self, diagonal: float = 0.0) -> np.ndarray:
        A = np.zeros((self.n_nodes, self.n_nodes))
        for (a, b), w in self.edges.items():
            A[a, b] = A[b, a] = w
        np.fill_diagonal(A, diagonal)
        return A

    def aggregation_matrix(self, unweighted: bool = False) -> np.ndarray:
        """Row-stochastic-style neighbour averaging operator.

        Row v holds w_vu / sum|w_vu| (or 1/deg when ``unweighted``); rows of
        isolated nodes are zero. Absolute values in the denominator keep the
        operator finite when negative cosine edges are present.
        """
        A = self.adjacency()
        if unweighted:
            A = (A != 0).astype(np.float64)
        denom = np.abs(A).sum(axis=1, keepdims=True)
        return np.divide(A, denom, out=np.zeros_like(A), where=denom > 0)

    def edge_list(self) -> list[tuple[NodeId, NodeId, float]]:
        return [(self.node_id(a), self.node_id(b), w) for (a, b), w in sorted(self.edges.items())]

    def digest(self) -> str:
        h = hashlib.sha256()
        for src, dst, w in self.edge_list():
            h.update(f"{src},{dst},{w!r}\n".encode())
        return h.hexdigest()

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src_kind", "src_idx", "dst_kind", "dst_idx", "weight"])
        for src, dst, w in self.edge_list():
            writer.writerow([src.kind, src.index, dst.kind, dst.index, repr(w)])

    def to_json(self) -> dict:
        return {
            "tweet_ids": list(self.tweet_ids),
            "tweet_users": [int(u) for u in self.tweet_users],
            "tweet_families": list(self.tweet_families),
            "user_indices": [int(u) for u in self.user_indices],
            "edges": [[a, b, w] for (a, b), w in sorted(self.edges.items())],
        }

    @classmethod
    def from_json(cls, data: dict) -> "HeteroGraph":
        return cls(
            tweet_ids=list(data["tweet_ids"]),
            tweet_users=np.array(data["tweet_users"], dtype=np.int64),
            tweet_families=list(data["tweet_families"]),
            user_indices=np.array(data["user_indices"], dtype=np.int64),
            edges={(int(a), int(b)): float(w) for a, b, w in data["edges"]},
        )


def cosine(a, b) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    na, nb = math.sqrt(float(a @ a)), math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity of a zero vector is undefined")
    return max(-1.0, min(1.0, float(a @ b) / (na * nb)))


def cosine_matrix(X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    nx = np.linalg.norm(X, axis=1)
    if (nx == 0).any():
        raise ValueError("cosine similarity of a zero vector is undefined")
    if Y is None:
        Y, ny = X, nx
    else:
        ny = np.linalg.norm(Y, axis=1)
        if (ny == 0).any():
            raise ValueError("cosine similarity of a zero vector is undefined")
    return np.clip((X @ Y.T) / np.outer(nx, ny), -1.0, 1.0)


def _top_neighbors(candidates: dict[int, float], topk: int | None) -> list[int]:
    ranked = sorted(candidates.items(), key=lambda kv: (-kv[1], kv[0]))
    if topk is not None:
        ranked = ranked[:topk]
    return [j for j, _ in ranked]


def build_graph(posts: Sequence[CleanPost], tweet_feats: np.ndarray, user_feats: np.ndarray | None,
                cfg: GraphConfig | None = None, n_users: int | None = None) -> HeteroGraph:
    """Assemble the user-tweet graph.

    ``user_feats`` is indexed by user vocabulary index. Tweet pairs of the
    same language family with cosine >= threshold become weighted edges,
    each tweet keeps its ``topk`` strongest (an edge survives if either end
    keeps it), and every tweet gets a weight-1 edge to its author.
    """
    cfg = cfg or GraphConfig()
    tweet_feats = np.asarray(tweet_feats, dtype=np.float64)
    n = len(posts)
    if tweet_feats.shape[0] != n:
        raise ValueError("one feature row per post is required")
    for p in posts:
        if p.user_index < 0 or (n_users is not None and p.user_index >= n_users):
            raise DataError(f"post {p.id} has an author outside the user vocabulary")
    families = [family_of(p.lang).value for p in posts]
    tweet_users = np.array([p.user_index for p in posts], dtype=np.int64)
    user_indices = np.array(sorted(set(tweet_users.tolist())), dtype=np.int64)

    candidates: list[dict[int, float]] = [dict() for _ in range(n)]
    if n > 1:
        sims = cosine_matrix(tweet_feats)
        # mirror the upper triangle so w(i, j) == w(j, i) bitwise
        sims = np.triu(sims) + np.triu(sims, 1).T
        fam = np.array(families)
        same = fam[:, None] == fam[None, :]
        np.fill_diagonal(same, False)
        ii, jj = np.nonzero(same & (sims >= cfg.sim_threshold))
        for i, j in zip(ii.tolist(), jj.tolist()):
            candidates[i][j] = float(sims[i, j])

    edges: dict[tuple[int, int], float] = {}
    for i in range(n):
        for j in _top_neighbors(candidates[i], cfg.topk):
            key = (i, j) if i < j else (j, i)
            edges[key] = candidates[i][j]
    graph = HeteroGraph([p.id for p in posts], tweet_users, families, user_indices, edges)
    for i, u in enumerate(tweet_users):
        edges[(i, graph.user_row(u))] = 1.0

    dim = tweet_feats.shape[1]
    F = np.zeros((graph.n_nodes, dim))
    F[:n] = tweet_feats
    if user_feats is not None:
        F[n:] = np.asarray(user_feats)[user_indices]
    graph.features = F
    return graph


@dataclass
class Neighborhood:
    nodes: list[NodeId]
    weights: np.ndarray
    rows: list[int]              # graph rows; -1 marks an author not in the graph
    new_author: bool = False


def attach_post(graph: HeteroGraph, post: CleanPost, feat, cfg: GraphConfig | None = None,
                tweet_feats: np.ndarray | None = None) -> Neighborhood:
    """Neighbourhood of an unseen post against a frozen training graph.

    ``tweet_feats`` overrides the stored tweet feature rows (the trained
    model recomputes them). The graph itself is never modified.
    """
    cfg = cfg or GraphConfig()
    nodes: list[NodeId] = [NodeId(USER, int(post.user_index))]
    weights = [1.0]
    author_row = graph.user_row(post.user_index) if post.user_index >= 0 else None
    rows = [author_row if author_row is not None else -1]
    feats = graph.features[: graph.n_tweets] if tweet_feats is None else np.asarray(tweet_feats)
    family = family_of(post.lang).value
    members = [i for i, f in enumerate(graph.tweet_families) if f == family]
    if members:
        sims = cosine_matrix(np.asarray(feat, dtype=np.float64)[None, :], feats[members])[0]
        cand = {i: float(s) for i, s in zip(members, sims.tolist()) if s >= cfg.sim_threshold}
        for i in _top_neighbors(cand, cfg.topk):
            nodes.append(NodeId(TWEET, i))
            weights.append(cand[i])
            rows.append(i)
    return Neighborhood(nodes, np.array(weights), rows, new_author=author_row is None)


def brute_force_edges(posts: Sequence[CleanPost], tweet_feats) -> dict[tuple[NodeId, NodeId], float]:
    """All-pairs reference construction with no threshold or cap."""
    groups = [{"bn", "hi", "mr", "gu"}, {"kn", "te", "ta"}, {"en"}]
    edges = {}
    for i in range(len(posts)):
        for j in range(len(posts)):
            if i >= j:
                continue
            pair = {posts[i].lang, posts[j].lang}
            if any(pair <= g for g in groups):
                edges[(NodeId(TWEET, i), NodeId(TWEET, j))] = cosine(tweet_feats[i], tweet_feats[j])
        edges[(NodeId(TWEET, i), NodeId(USER, posts[i].user_index))] = 1.0
    return edges


def synthetic_graph(n_tweets: int = 15, n_users: int = 5, dim: int = 16, seed: int = 42,
                    n_clusters: int = 3, cfg: GraphConfig | None = None) -> HeteroGraph:
    """Small clustered random graph for exercising the autoencoder."""
    rng = SplitMix64(seed)
    centers = [u64_to_signed_unit(splitmix64_block(rng.next_u64(), dim)) for _ in range(n_clusters)]
    langs = [LANG_CODES[rng.randbelow(len(LANG_CODES))] for _ in range(n_tweets)]
    feats = np.empty((n_tweets, dim))
    posts = []
    for i in range(n_tweets):
        noise = u64_to_signed_unit(splitmix64_block(rng.next_u64(), dim))
        feats[i] = centers[i % n_clusters] + 0.4 * noise
        posts.append(CleanPost(f"t{i}", i % n_users, "", langs[i], frozenset({0})))
    user_feats = np.stack([u64_to_signed_unit(splitmix64_block(rng.next_u64(), dim)) for _ in range(n_users)])
    return build_graph(posts, feats, user_feats, cfg or GraphConfig(sim_threshold=0.3, topk=4))
