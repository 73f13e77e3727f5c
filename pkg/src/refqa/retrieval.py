"""Hybrid retrieval: BM25 lexical index, exhaustive vector index, fusion.

Lexical scoring is BM25 with the non-negative idf variant
``ln(1 + (N - df + 0.5) / (df + 0.5))`` and defaults k1=1.2, b=0.75.
Fusion min-max normalizes each arm's scores over its own candidate pool
(degenerate ranges normalize to 0) and combines them convexly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .embeddings import EmbeddingBackend
from .errors import (
    BackendError,
    CorpusError,
    IndexPersistenceError,
    UnanswerableQueryError,
)
from .tokenization import load_stopwords, tokenize

# Per-arm candidate pool floor: each arm contributes max(k, this) candidates.
CANDIDATE_POOL_FLOOR = 50

LEXICAL_INDEX_FORMAT = "refqa-lexical-index"
VECTOR_INDEX_FORMAT = "refqa-vector-index"
INDEX_VERSION = 1


@dataclass
class ScoredHit:
    doc_id: str
    lexical_score: float = 0.0
    semantic_score: float = 0.0
    fused_score: float = 0.0


@dataclass
class LexicalIndex:
    postings: dict[str, list[tuple[int, int]]]  # term -> [(doc position, tf)]
    doc_ids: list[str]
    doc_lengths: list[int]
    avg_doc_length: float
    doc_count: int
    k1: float
    b: float


@dataclass
class VectorIndex:
    doc_ids: list[str]
    vectors: np.ndarray  # (doc_count, dimension), rows L2-normalized
    dimension: int


def question_to_query(
    question: str, stopwords: frozenset[str] | None = None
) -> list[str]:
    """Transform a user question into lexical query terms.

    Lowercased alphanumeric tokens with stopwords removed; original order
    and duplicates kept. Raises ``UnanswerableQueryError`` when nothing
    survives.
    """
    if not question or not question.strip():
        raise UnanswerableQueryError("question is empty")
    stop = stopwords if stopwords is not None else load_stopwords()
    terms = [t for t in tokenize(question) if t not in stop]
    if not terms:
        raise UnanswerableQueryError(
            f"question contains only stopwords: {question!r}"
        )
    return terms


def build_lexical_index(corpus: Corpus, k1: float = 1.2, b: float = 0.75) -> LexicalIndex:
    """Index tokenized ``title + abstract`` of every document."""
    if len(corpus) == 0:
        raise CorpusError("cannot index an empty corpus")
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: list[int] = []
    doc_ids: list[str] = []
    for pos, doc in enumerate(corpus):
        tokens = tokenize(doc.full_text)
        doc_lengths.append(len(tokens))
        doc_ids.append(doc.doc_id)
        counts: dict[str, int] = {}
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((pos, tf))
    return LexicalIndex(
        postings=postings,
        doc_ids=doc_ids,
        doc_lengths=doc_lengths,
        avg_doc_length=sum(doc_lengths) / len(doc_lengths),
        doc_count=len(doc_ids),
        k1=k1,
        b=b,
    )


def _idf(doc_count: int, df: int) -> float:
    return math.log(1.0 + (doc_count - df + 0.5) / (df + 0.5))


def search_lexical(index: LexicalIndex, terms: list[str], k: int) -> list[ScoredHit]:
    """BM25 top-k; documents sharing no query term are excluded."""
    if not terms:
        raise ValueError("query terms must be non-empty")
    if k <= 0:
        raise ValueError("k must be positive")
    scores: dict[int, float] = {}
    avgdl = index.avg_doc_length
    for term in terms:
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = _idf(index.doc_count, len(plist))
        for pos, tf in plist:
            dl = index.doc_lengths[pos]
            length_norm = 1.0 - index.b + index.b * (dl / avgdl) if avgdl > 0 else 1.0
            contribution = idf * tf * (index.k1 + 1.0) / (tf + index.k1 * length_norm)
            scores[pos] = scores.get(pos, 0.0) + contribution
    hits = [ScoredHit(index.doc_ids[pos], lexical_score=s) for pos, s in scores.items()]
    hits.sort(key=lambda h: (-h.lexical_score, h.doc_id))
    return hits[:k]


def embed_corpus(corpus: Corpus, backend: EmbeddingBackend) -> VectorIndex:
    """One L2-normalized vector per document, from ``title + abstract``."""
    if backend.dimension <= 0:
        raise ValueError("backend dimension must be positive")
    rows = []
    for doc in corpus:
        try:
            vec = np.asarray(backend.embed(doc.full_text), dtype=np.float64)
        except Exception as exc:
            raise BackendError("embedding", f"doc {doc.doc_id}: {exc}") from exc
        if vec.shape != (backend.dimension,):
            raise BackendError(
                "embedding", f"doc {doc.doc_id}: bad vector shape {vec.shape}"
            )
        if not np.all(np.isfinite(vec)):
            raise BackendError("embedding", f"doc {doc.doc_id}: non-finite vector")
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise BackendError("embedding", f"doc {doc.doc_id}: zero vector")
        rows.append(vec / norm)
    return VectorIndex(
        doc_ids=[d.doc_id for d in corpus],
        vectors=np.vstack(rows),
        dimension=backend.dimension,
    )


def search_semantic(index: VectorIndex, query_vector, k: int) -> list[ScoredHit]:
    """Exhaustive cosine top-k (stored vectors are unit, so cosine = dot)."""
    if k <= 0:
        raise ValueError("k must be positive")
    q = np.asarray(query_vector, dtype=np.float64)
    if q.shape != (index.dimension,):
        raise ValueError(
            f"query vector dimension {q.shape} != index dimension {index.dimension}"
        )
    if not np.all(np.isfinite(q)):
        raise ValueError("query vector has non-finite components")
    norm = float(np.linalg.norm(q))
    if norm == 0.0:
        raise ValueError("query vector is zero")
    sims = index.vectors @ (q / norm)
    hits = [
        ScoredHit(doc_id, semantic_score=float(s))
        for doc_id, s in zip(index.doc_ids, sims)
    ]
    hits.sort(key=lambda h: (-h.semantic_score, h.doc_id))
    return hits[:k]


def _minmax(scores: dict[str, float]) -> dict[str, float]:
    if not scores:
        return {}
    lo = min(scores.values())
    hi = max(scores.values())
    if hi == lo:
        return {doc_id: 0.0 for doc_id in scores}
    span = hi - lo
    return {doc_id: (s - lo) / span for doc_id, s in scores.items()}


def fuse_scores(
    lexical: list[tuple[str, float]],
    semantic: list[tuple[str, float]],
    lexical_weight: float = 0.5,
) -> list[ScoredHit]:
    """Min-max normalize each arm over its candidates and combine.

    Candidates missing from an arm contribute 0 in that arm. Result is
    sorted by fused score descending, ties by doc_id ascending.
    """
    if not 0.0 <= lexical_weight <= 1.0:
        raise ValueError("lexical_weight must be in [0, 1]")
    lex_raw = dict(lexical)
    sem_raw = dict(semantic)
    lex_norm = _minmax(lex_raw)
    sem_norm = _minmax(sem_raw)
    hits = []
    for doc_id in set(lex_raw) | set(sem_raw):
        fused = lexical_weight * lex_norm.get(doc_id, 0.0) + (
            1.0 - lexical_weight
        ) * sem_norm.get(doc_id, 0.0)
        hits.append(
            ScoredHit(
                doc_id,
                lexical_score=lex_raw.get(doc_id, 0.0),
                semantic_score=sem_raw.get(doc_id, 0.0),
                fused_score=fused,
            )
        )
    hits.sort(key=lambda h: (-h.fused_score, h.doc_id))
    return hits


@dataclass
class Retriever:
    """Both arms plus the embedding backend, ready for hybrid queries."""

    corpus: Corpus
    lexical_index: LexicalIndex
    vector_index: VectorIndex
    embedding_backend: EmbeddingBackend
    stopwords: frozenset[str] = field(default_factory=load_stopwords)

    @classmethod
    def build(
        cls,
        corpus: Corpus,
        embedding_backend: EmbeddingBackend,
        k1: float = 1.2,
        b: float = 0.75,
        stopwords: frozenset[str] | None = None,
    ) -> "Retriever":
        return cls(
            corpus=corpus,
            lexical_index=build_lexical_index(corpus, k1=k1, b=b),
            vector_index=embed_corpus(corpus, embedding_backend),
            embedding_backend=embedding_backend,
            stopwords=stopwords if stopwords is not None else load_stopwords(),
        )

    def hybrid_search(
        self, question: str, k: int, lexical_weight: float = 0.5
    ) -> list[ScoredHit]:
        if k <= 0:
            raise ValueError("k must be positive")
        terms = question_to_query(question, self.stopwords)
        pool = max(k, CANDIDATE_POOL_FLOOR)
        lexical_hits = search_lexical(self.lexical_index, terms, pool)
        query_vec = self.embedding_backend.embed(question)
        semantic_hits = search_semantic(self.vector_index, query_vec, pool)
        fused = fuse_scores(
            [(h.doc_id, h.lexical_score) for h in lexical_hits],
            [(h.doc_id, h.semantic_score) for h in semantic_hits],
            lexical_weight,
        )
        return fused[:k]


def save_lexical_index(index: LexicalIndex, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "format": LEXICAL_INDEX_FORMAT,
            "version": INDEX_VERSION,
            "k1": index.k1,
            "b": index.b,
            "doc_count": index.doc_count,
            "avg_doc_length": index.avg_doc_length,
        }
        fh.write(json.dumps(header) + "\n")
        for doc_id, length in zip(index.doc_ids, index.doc_lengths):
            fh.write(json.dumps({"doc_id": doc_id, "length": length}) + "\n")
        for term in sorted(index.postings):
            entry = {"term": term, "postings": index.postings[term]}
            fh.write(json.dumps(entry) + "\n")


def _read_header(fh, expected_format: str, path: Path) -> dict:
    line = fh.readline()
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise IndexPersistenceError(f"{path}: missing header") from exc
    if header.get("format") != expected_format:
        raise IndexPersistenceError(f"{path}: not a {expected_format} file")
    if header.get("version") != INDEX_VERSION:
        raise IndexPersistenceError(
            f"{path}: unsupported version {header.get('version')}"
        )
    return header


def load_lexical_index(path: str | Path) -> LexicalIndex:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = _read_header(fh, LEXICAL_INDEX_FORMAT, path)
        doc_count = header["doc_count"]
        doc_ids, doc_lengths = [], []
        for _ in range(doc_count):
            record = json.loads(fh.readline())
            doc_ids.append(record["doc_id"])
            doc_lengths.append(record["length"])
        postings: dict[str, list[tuple[int, int]]] = {}
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            postings[record["term"]] = [tuple(p) for p in record["postings"]]
    return LexicalIndex(
        postings=postings,
        doc_ids=doc_ids,
        doc_lengths=doc_lengths,
        avg_doc_length=header["avg_doc_length"],
        doc_count=doc_count,
        k1=header["k1"],
        b=header["b"],
    )


def save_vector_index(index: VectorIndex, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "format": VECTOR_INDEX_FORMAT,
            "version": INDEX_VERSION,
            "dimension": index.dimension,
            "doc_count": len(index.doc_ids),
        }
        fh.write(json.dumps(header) + "\n")
        for doc_id, row in zip(index.doc_ids, index.vectors):
            fh.write(json.dumps({"doc_id": doc_id, "vector": row.tolist()}) + "\n")


def load_vector_index(path: str | Path) -> VectorIndex:
    path = Path(path)
    doc_ids, rows = [], []
    with path.open(encoding="utf-8") as fh:
        header = _read_header(fh, VECTOR_INDEX_FORMAT, path)
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            doc_ids.append(record["doc_id"])
            rows.append(record["vector"])
    dimension = header["dimension"]
    vectors = (
        np.asarray(rows, dtype=np.float64)
        if rows
        else np.zeros((0, dimension), dtype=np.float64)
    )
    if rows and vectors.shape[1] != dimension:
        raise IndexPersistenceError(f"{path}: vector width != declared dimension")
    return VectorIndex(doc_ids=doc_ids, vectors=vectors, dimension=dimension)
