"""Embedding backends: the seam behind which the real encoder model lives.

Two implementations ship: a remote client speaking the service wire
contract (``{"texts": [...]} -> {"vectors": [[...]]}``) and a
deterministic hashed character-trigram stub for tests and offline use.
The stub accepts a synonym table so paraphrase behavior can be simulated:
words mapped to the same canonical form produce identical vectors.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Protocol, Sequence

import hashlib

import httpx
import numpy as np

from .errors import BackendError, TransportError
from .tokenization import tokenize


class EmbeddingBackend(Protocol):
    dimension: int

    def embed(self, text: str) -> Sequence[float]:
        ...


class HashedTrigramEmbedding:
    """Deterministic embedding: signed hashing of character trigrams.

    Tokens are lowercased, mapped through the synonym table, padded with
    ``#`` markers, and their trigrams hashed into ``dimension`` signed
    buckets. Same text (or synonym-equivalent text) always yields the
    same vector, across processes.
    """

    def __init__(
        self,
        dimension: int = 128,
        synonyms: Mapping[str, str] | Iterable[tuple[str, str]] | None = None,
    ):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        if synonyms is None:
            self.synonyms: dict[str, str] = {}
        else:
            items = synonyms.items() if isinstance(synonyms, Mapping) else synonyms
            self.synonyms = {k.lower(): v.lower() for k, v in items}
        self._token_cache: dict[str, list[tuple[int, int]]] = {}

    def _token_buckets(self, token: str) -> list[tuple[int, int]]:
        cached = self._token_cache.get(token)
        if cached is not None:
            return cached
        padded = f"#{token}#"
        buckets = []
        for i in range(len(padded) - 2):
            digest = hashlib.blake2b(padded[i : i + 3].encode("utf-8"), digest_size=8)
            h = int.from_bytes(digest.digest(), "big")
            sign = 1 if (h >> 48) & 1 else -1
            buckets.append((h % self.dimension, sign))
        self._token_cache[token] = buckets
        return buckets

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in tokenize(text):
            token = self.synonyms.get(token, token)
            for bucket, sign in self._token_buckets(token):
                vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return vec


class RemoteEmbeddingBackend:
    """HTTP client for an external embedding server."""

    def __init__(
        self,
        url: str,
        dimension: int,
        timeout: float = 30.0,
        client: httpx.Client | None = None,
    ):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.url = url
        self.dimension = dimension
        self._client = client or httpx.Client(timeout=timeout)

    def embed(self, text: str) -> list[float]:
        return self.embed_many([text])[0]

    def embed_many(self, texts: list[str]) -> list[list[float]]:
        try:
            response = self._client.post(self.url, json={"texts": texts})
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise TransportError(f"embedding @ {self.url}", str(exc)) from exc
        body = response.json()
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise BackendError(f"embedding @ {self.url}", "malformed vectors field")
        for vec in vectors:
            if len(vec) != self.dimension:
                raise BackendError(
                    f"embedding @ {self.url}",
                    f"expected dimension {self.dimension}, got {len(vec)}",
                )
        return vectors
