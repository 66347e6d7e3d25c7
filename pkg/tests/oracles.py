"""Independent reference implementations shared by unit and acceptance tests."""
import itertools
import math

import numpy as np

from tagalog.corpus import CleanPost

FAMILY = {"bn": 0, "hi": 0, "mr": 0, "gu": 0, "kn": 1, "te": 1, "ta": 1, "en": 2}
LANGS = sorted(FAMILY)


def random_corpus(rng, n_posts, n_users, dim=8, n_clusters=3, noise=0.5):
    """Posts with random languages and authors and clustered features."""
    centers = rng.normal(size=(n_clusters, dim))
    feats = centers[rng.integers(n_clusters, size=n_posts)] + noise * rng.normal(size=(n_posts, dim))
    posts = [CleanPost(f"p{i}", int(rng.integers(n_users)), "w w w", LANGS[rng.integers(len(LANGS))],
                       frozenset({0})) for i in range(n_posts)]
    return posts, feats


def py_cosine(a, b):
    dot = math.fsum(x * y for x, y in zip(a, b))
    return dot / (math.sqrt(math.fsum(x * x for x in a)) * math.sqrt(math.fsum(y * y for y in b)))


def graph_violations(graph, posts, feats, threshold, topk):
    """List of human-readable invariant failures (empty when the graph is sound)."""
    bad = []
    A = graph.adjacency()
    if not np.array_equal(A, A.T):
        bad.append("asymmetric")
    n = graph.n_tweets
    for (a, b), w in graph.edges.items():
        if a == b:
            bad.append(f"self loop {a}")
        if a < n and b < n:
            if FAMILY[posts[a].lang] != FAMILY[posts[b].lang]:
                bad.append(f"cross-family edge {a}-{b}")
            if not (threshold - 1e-12 <= w <= 1 + 1e-12):
                bad.append(f"weight {w} out of range on {a}-{b}")
            if abs(w - py_cosine(feats[a], feats[b])) > 1e-9:
                bad.append(f"weight {w} is not the cosine on {a}-{b}")
        elif a < n <= b:
            if w != 1.0:
                bad.append(f"author edge weight {w}")
        else:
            bad.append(f"user-user edge {a}-{b}")
    for i, p in enumerate(posts):
        users = [j for j in graph.neighbors(i) if j >= n]
        if users != [graph.user_row(p.user_index)]:
            bad.append(f"tweet {i} author edges {users}")
    if topk is not None:
        # every similarity edge must be among the top-k candidates of one endpoint
        kept = []
        for x in range(n):
            cands = [(py_cosine(feats[x], feats[j]), -j) for j in range(n)
                     if j != x and FAMILY[posts[j].lang] == FAMILY[posts[x].lang]]
            cands = sorted((c for c in cands if c[0] >= threshold), reverse=True)[:topk]
            kept.append({-j for _, j in cands})
        for (a, b) in graph.edges:
            if b < n and b not in kept[a] and a not in kept[b]:
                bad.append(f"edge {a}-{b} outside both top-k lists")
    return bad


def exact_edges(posts, feats):
    """All same-family tweet pairs plus author edges, as ((kind, idx), (kind, idx)) -> weight."""
    out = {}
    for i, j in itertools.combinations(range(len(posts)), 2):
        if FAMILY[posts[i].lang] == FAMILY[posts[j].lang]:
            out[(("tweet", i), ("tweet", j))] = py_cosine(feats[i], feats[j])
    for i, p in enumerate(posts):
        out[(("tweet", i), ("user", p.user_index))] = 1.0
    return out


def set_metrics(gh, rh):
    """HR, P, R, F1 by counting members one at a time."""
    common = 0
    for x in rh:
        if x in gh:
            common += 1
    hr = 1 if common > 0 else 0
    p = common / len(rh)
    r = common / len(gh)
    f = 0.0 if common == 0 else 2 * p * r / (p + r)
    return hr, p, r, f


def gae_loss_loop(A, A_hat):
    n = len(A)
    return math.fsum((A_hat[i][j] - A[i][j]) ** 2 for i in range(n) for j in range(n)) / (n * n)


def sage_loop(H, A, W, b):
    """One mean-aggregator layer with explicit neighbour sums."""
    n, out = len(H), []
    for v in range(n):
        nbrs = [u for u in range(n) if A[v][u] != 0 and u != v]
        denom = math.fsum(abs(A[v][u]) for u in nbrs)
        m = np.zeros(H.shape[1]) if not nbrs else sum(A[v][u] * H[u] for u in nbrs) / denom
        out.append(np.tanh(W @ np.concatenate([H[v], m]) + b))
    return np.array(out)
