"""End-to-end pipeline: retrieve, generate, parse, verify.

The engine owns the corpus, both indices, and the three backend seams;
``ask`` runs the full pipe and returns a JSON-ready response with a
per-stage timing breakdown.
"""

from __future__ import annotations

import hashlib
import time
from collections import OrderedDict
from pathlib import Path

from .claims import parse_answer
from .config import (
    EngineConfig,
    make_embedding_backend,
    make_generation_backend,
    make_nli_backend,
    make_template,
)
from .corpus import Corpus, Document, load_corpus
from .errors import RefqaError, UnanswerableQueryError
from .feedback import FeedbackStore
from .generation import build_prompt, generate_answer, pack_context
from .retrieval import (
    Retriever,
    build_lexical_index,
    embed_corpus,
    load_lexical_index,
    load_vector_index,
)
from .verification import VerifiedAnswer, verify_answer

STAGES = ("retrieve", "generate", "parse", "verify")


class StageError(RefqaError):
    """Pipeline failure annotated with the stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _answer_id(question: str, answer_text: str) -> str:
    digest = hashlib.sha256(f"{question}\n{answer_text}".encode("utf-8"))
    return digest.hexdigest()[:16]


class Engine:
    def __init__(self, config: EngineConfig):
        config.validate()
        self.config = config
        self.corpus: Corpus = load_corpus(config.corpus_path)
        self.embedding_backend = make_embedding_backend(config)
        lexical = (
            load_lexical_index(config.lexical_index_path)
            if config.lexical_index_path and Path(config.lexical_index_path).exists()
            else build_lexical_index(self.corpus)
        )
        vector = (
            load_vector_index(config.vector_index_path)
            if config.vector_index_path and Path(config.vector_index_path).exists()
            else embed_corpus(self.corpus, self.embedding_backend)
        )
        self.retriever = Retriever(
            corpus=self.corpus,
            lexical_index=lexical,
            vector_index=vector,
            embedding_backend=self.embedding_backend,
        )
        self.generation_backend = make_generation_backend(config)
        self.nli_backend = make_nli_backend(config)
        self.template = make_template(config)
        self.feedback_store = FeedbackStore(config.feedback_store_path)
        # Answers served this process, for feedback referential checks.
        self._answers: OrderedDict[str, dict] = OrderedDict()
        self._answers_cap = 1000

    def get_document(self, doc_id: str) -> Document | None:
        return self.corpus.get(doc_id)

    def lookup_answer(self, answer_id: str) -> dict | None:
        return self._answers.get(answer_id)

    def _remember_answer(self, answer_id: str, entry: dict) -> None:
        self._answers[answer_id] = entry
        while len(self._answers) > self._answers_cap:
            self._answers.popitem(last=False)

    def ask(
        self,
        question: str,
        k: int | None = None,
        lexical_weight: float | None = None,
    ) -> dict:
        """Run the full pipeline; raises StageError on backend failures
        and UnanswerableQueryError on unusable questions."""
        k = k if k is not None else self.config.retrieval_k
        weight = (
            lexical_weight if lexical_weight is not None else self.config.lexical_weight
        )
        timings: dict[str, float] = {}

        started = time.perf_counter()
        try:
            hits = self.retriever.hybrid_search(question, k=k, lexical_weight=weight)
        except UnanswerableQueryError:
            raise
        except Exception as exc:
            raise StageError("retrieve", exc) from exc
        timings["retrieve"] = time.perf_counter() - started

        if not hits:
            for stage in STAGES[1:]:
                timings[stage] = 0.0
            return self._response(question, "", None, hits, timings, "no relevant documents")

        started = time.perf_counter()
        try:
            params = self.config.generation_params()
            docs = pack_context(
                hits,
                self.corpus,
                params.context_token_budget,
                template=self.template,
                question=question,
            )
            prompt = build_prompt(question, docs, self.template)
            answer_text = generate_answer(self.generation_backend, prompt, params)
        except Exception as exc:
            raise StageError("generate", exc) from exc
        timings["generate"] = time.perf_counter() - started

        started = time.perf_counter()
        parsed = parse_answer(answer_text, docs)
        timings["parse"] = time.perf_counter() - started

        started = time.perf_counter()
        try:
            verified = verify_answer(
                parsed,
                self.corpus,
                self.nli_backend,
                highlight_k=self.config.highlight_k,
                embedding_backend=(
                    self.embedding_backend
                    if self.config.use_embedding_highlights
                    else None
                ),
                concurrency=self.config.nli_concurrency,
                retries=self.config.nli_retries,
            )
        except Exception as exc:
            raise StageError("verify", exc) from exc
        timings["verify"] = time.perf_counter() - started

        response = self._response(question, answer_text, verified, hits, timings, None)
        self._remember_answer(
            response["answer_id"],
            {
                "question": question,
                "answer_text": answer_text,
                "context_doc_ids": [d.doc_id for d in docs],
            },
        )
        return response

    def _response(
        self,
        question: str,
        answer_text: str,
        verified: VerifiedAnswer | None,
        hits,
        timings: dict[str, float],
        detail: str | None,
    ) -> dict:
        claims = []
        if verified is not None:
            for index, result in enumerate(verified.results):
                claims.append(
                    {
                        "index": index,
                        "text": result.claim.text,
                        "references": list(result.claim.references),
                        "unreferenced": result.claim.unreferenced,
                        "status": result.status.value,
                        "verdicts": [
                            {
                                "doc_id": pv.doc_id,
                                "label": pv.verdict.label.value,
                                "confidence": pv.verdict.confidence,
                                "unknown_source": pv.unknown_source,
                            }
                            for pv in result.verdicts
                        ],
                        "numeric_divergence_warnings": [
                            pv.doc_id for pv in result.verdicts if pv.numeric_divergence
                        ],
                        "highlights": [
                            {
                                "doc_id": h.doc_id,
                                "sentences": [
                                    {"text": text, "score": score}
                                    for text, score in h.sentences
                                ],
                            }
                            for h in result.highlights
                        ],
                    }
                )
        response = {
            "question": question,
            "answer_id": _answer_id(question, answer_text),
            "answer_text": answer_text,
            "claims": claims,
            "retrieved": [
                {
                    "doc_id": h.doc_id,
                    "lexical_score": h.lexical_score,
                    "semantic_score": h.semantic_score,
                    "fused_score": h.fused_score,
                }
                for h in hits
            ],
            "timings": {stage: timings.get(stage, 0.0) for stage in STAGES},
        }
        if detail is not None:
            response["detail"] = detail
        return response
