"""HTTP service exposing the pipeline and the feedback loop.

Endpoints: POST /api/ask, POST /api/feedback, GET /api/documents/{id},
GET /api/health. Responses are plain JSON mirroring the engine's
dictionaries; backend failures surface as 502 naming the failing stage.
"""

from __future__ import annotations

import socket
from urllib.parse import urlparse

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .engine import Engine, StageError
from .errors import FeedbackValidationError, UnanswerableQueryError
from .feedback import FeedbackKind, FeedbackRecord


class AskRequest(BaseModel):
    question: str
    k: int | None = Field(default=None, gt=0)
    lexical_weight: float | None = Field(default=None, ge=0.0, le=1.0)


class FeedbackRequest(BaseModel):
    answer_id: str
    kind: FeedbackKind
    original_value: str
    corrected_value: str
    claim_index: int | None = None
    doc_id: str | None = None
    user: str = ""


def _backend_reachable(spec: str) -> bool | None:
    """TCP-level reachability for http(s) backends; None for local ones."""
    if not spec.startswith(("http://", "https://")):
        return None
    parsed = urlparse(spec)
    port = parsed.port or (443 if parsed.scheme == "https" else 80)
    try:
        with socket.create_connection((parsed.hostname, port), timeout=0.5):
            return True
    except OSError:
        return False


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="refqa", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/api/ask")
    def ask(request: AskRequest) -> dict:
        try:
            return engine.ask(
                request.question, k=request.k, lexical_weight=request.lexical_weight
            )
        except UnanswerableQueryError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except StageError as exc:
            raise HTTPException(
                status_code=502, detail={"stage": exc.stage, "error": str(exc.cause)}
            ) from exc

    @app.post("/api/feedback")
    def feedback(request: FeedbackRequest) -> dict:
        answer = engine.lookup_answer(request.answer_id)
        if answer is None:
            raise HTTPException(
                status_code=404, detail=f"unknown answer_id {request.answer_id!r}"
            )
        record = FeedbackRecord(
            kind=request.kind,
            question=answer["question"],
            answer_text=answer["answer_text"],
            original_value=request.original_value,
            corrected_value=request.corrected_value,
            claim_index=request.claim_index,
            doc_id=request.doc_id,
            context_doc_ids=answer["context_doc_ids"],
            user=request.user,
        )
        try:
            record_id = engine.feedback_store.append(record)
        except FeedbackValidationError as exc:
            raise HTTPException(
                status_code=400, detail={"field": exc.field, "error": str(exc)}
            ) from exc
        return {"record_id": record_id}

    @app.get("/api/documents/{doc_id}")
    def get_document(doc_id: str) -> dict:
        if not doc_id.isdigit():
            raise HTTPException(status_code=400, detail="doc_id must be digits")
        doc = engine.get_document(doc_id)
        if doc is None:
            raise HTTPException(status_code=404, detail=f"no document {doc_id}")
        return {
            "doc_id": doc.doc_id,
            "title": doc.title,
            "abstract": doc.abstract,
            "sentences": [
                {"text": s.text, "start": s.start, "end": s.end}
                for s in doc.sentences
            ],
        }

    @app.get("/api/health")
    def health() -> dict:
        return {
            "status": "ok",
            "documents": len(engine.corpus),
            "lexical_terms": len(engine.retriever.lexical_index.postings),
            "vectors": len(engine.retriever.vector_index.doc_ids),
            "backends": {
                "generation": {
                    "spec": engine.config.generation_backend,
                    "reachable": _backend_reachable(engine.config.generation_backend),
                },
                "embedding": {
                    "spec": engine.config.embedding_backend,
                    "reachable": _backend_reachable(engine.config.embedding_backend),
                },
                "nli": {
                    "spec": engine.config.nli_backend,
                    "reachable": _backend_reachable(engine.config.nli_backend),
                },
            },
        }

    return app
