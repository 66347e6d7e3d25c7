"""Token sequences and deterministic token embeddings.

The contextual encoder is pluggable: anything with a ``dim`` attribute and a
``__call__(token) -> vector`` works as a provider. Two are shipped, a pure
hashing provider and a file-backed one for precomputed vectors that falls
back to hashing for unknown tokens.
"""
from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .hashing import fnv1a64, splitmix64_block, u64_to_signed_unit

CLS = "[CLS]"
SEP = "[SEP]"
PAD = "[PAD]"

# xor-ed into the run seed for vocabulary tables so they never coincide
# with the token vectors of the same string
TABLE_SEED_SALT = 0x5EEDFACE0BADF00D


def tokenize(text: str, seq_len: int = 50) -> list[str]:
    """Whitespace tokens wrapped in CLS/SEP and padded to ``seq_len``.

    Content beyond ``seq_len - 2`` tokens is dropped so SEP always fits.
    """
    if seq_len < 3:
        raise ValueError("seq_len must be at least 3")
    words = text.split()[: seq_len - 2]
    tokens = [CLS, *words, SEP]
    return tokens + [PAD] * (seq_len - len(tokens))


def pad_mask(tokens: Sequence[str]) -> np.ndarray:
    return np.array([t != PAD for t in tokens], dtype=bool)


@lru_cache(maxsize=1 << 16)
def _hash_embed_cached(token: str, dim: int, seed: int) -> np.ndarray:
    state = fnv1a64(token.encode("utf-8")) ^ (seed & ((1 << 64) - 1))
    vec = u64_to_signed_unit(splitmix64_block(state, dim))
    vec = vec / np.sqrt(np.dot(vec, vec))
    vec.setflags(write=False)
    return vec


def hash_embed(token: str, dim: int, seed: int = 0) -> np.ndarray:
    """Unit-norm pseudo-random vector determined by (token, dim, seed).

    PAD maps to the zero vector.
    """
    if token == PAD:
        return np.zeros(dim)
    return _hash_embed_cached(token, dim, seed).copy()


class EmbeddingProvider(Protocol):
    dim: int

    def __call__(self, token: str) -> np.ndarray: ...


class HashEmbedding:
    def __init__(self, dim: int, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def __call__(self, token: str) -> np.ndarray:
        return hash_embed(token, self.dim, self.seed)

    def __repr__(self):
        return f"HashEmbedding(dim={self.dim}, seed={self.seed})"


class PrecomputedEmbedding:
    """Stored vectors with hashing fallback for out-of-vocabulary tokens."""

    def __init__(self, vectors: dict[str, np.ndarray], dim: int, seed: int = 0):
        self.vectors = vectors
        self.dim = dim
        self.fallback = HashEmbedding(dim, seed)

    def __call__(self, token: str) -> np.ndarray:
        if token == PAD:
            return np.zeros(self.dim)
        vec = self.vectors.get(token)
        if vec is None:
            return self.fallback(token)
        return vec.copy()

    def __len__(self):
        return len(self.vectors)


def load_precomputed(path: str | Path, dim: int | None = None, seed: int = 0) -> PrecomputedEmbedding:
    """Read an embedding file: a ``dim=<D>`` header then ``token v1 ... vD`` lines."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read embedding file {path}: {exc}") from exc
    if not lines or not lines[0].startswith("dim="):
        raise DataError(f"{path}: first line must be dim=<D>")
    try:
        declared = int(lines[0][4:])
    except ValueError:
        raise DataError(f"{path}: bad header {lines[0]!r}") from None
    if dim is not None and declared != dim:
        raise ConfigError(f"{path}: declares dim={declared} but the model uses {dim}")
    vectors = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.rstrip().split(" ")
        if len(parts) != declared + 1:
            raise DataError(f"{path}:{lineno}: expected {declared} values, got {len(parts) - 1}")
        try:
            vectors[parts[0]] = np.array([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    return PrecomputedEmbedding(vectors, declared, seed)


def encode_tokens(tokens: Sequence[str], provider: EmbeddingProvider, dim: int | None = None) -> np.ndarray:
    """Stack provider vectors into the S x D token matrix."""
    if dim is not None and provider.dim != dim:
        raise ConfigError(f"embedding provider has dim {provider.dim}, expected {dim}")
    out = np.empty((len(tokens), provider.dim))
    for s, tok in enumerate(tokens):
        vec = provider(tok)
        if vec.shape != (provider.dim,):
            raise ConfigError(f"provider returned shape {vec.shape} for {tok!r}")
        out[s] = vec
    return out


def init_table(keys: Sequence[str], dim: int, seed: int) -> np.ndarray:
    """Embedding table whose row i is the hashed vector of ``keys[i]``."""
    salted = seed ^ TABLE_SEED_SALT
    if not keys:
        return np.zeros((0, dim))
    return np.stack([hash_embed(k, dim, salted) for k in keys])


def make_provider(dim: int, seed: int, embed_file: str | None = None) -> EmbeddingProvider:
    if embed_file:
        return load_precomputed(embed_file, dim=dim, seed=seed)
    return HashEmbedding(dim, seed)
