"""User feedback capture and export as fine-tuning data.

The store is a single append-only JSONL file with write-ahead semantics:
a record is flushed and fsynced before its id is returned. Records are
never mutated or deleted; ids increase strictly.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from .claims import parse_answer
from .corpus import Corpus, Document
from .errors import FeedbackValidationError
from .verification import VerdictLabel


class FeedbackKind(str, Enum):
    VERDICT_OVERRIDE = "VERDICT_OVERRIDE"
    ANSWER_EDIT = "ANSWER_EDIT"


@dataclass
class FeedbackRecord:
    kind: FeedbackKind
    question: str
    answer_text: str
    original_value: str
    corrected_value: str
    claim_index: int | None = None
    doc_id: str | None = None
    context_doc_ids: list[str] = field(default_factory=list)
    user: str = ""
    record_id: int | None = None
    timestamp: str | None = None


def _validate(record: FeedbackRecord) -> None:
    kind = FeedbackKind(record.kind)
    if kind is FeedbackKind.VERDICT_OVERRIDE:
        if record.claim_index is None or record.claim_index < 0:
            raise FeedbackValidationError(
                "claim_index", "required for verdict overrides"
            )
        claims = parse_answer(record.answer_text, []).claims
        if record.claim_index >= len(claims):
            raise FeedbackValidationError(
                "claim_index",
                f"answer has {len(claims)} claims, got index {record.claim_index}",
            )
        for fieldname in ("original_value", "corrected_value"):
            value = getattr(record, fieldname)
            try:
                VerdictLabel(value)
            except ValueError:
                raise FeedbackValidationError(
                    fieldname, f"{value!r} is not a verdict class"
                ) from None
        if record.doc_id is not None and not str(record.doc_id).isdigit():
            raise FeedbackValidationError("doc_id", "must be digits")
    else:
        for fieldname in ("original_value", "corrected_value"):
            if not getattr(record, fieldname).strip():
                raise FeedbackValidationError(
                    fieldname, "answer edits need full original and corrected text"
                )


class FeedbackStore:
    """Append-only store over one JSONL file; single serialized writer."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._next_id = 1
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._next_id = max(self._next_id, json.loads(line)["record_id"] + 1)
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: FeedbackRecord) -> int:
        _validate(record)
        with self._lock:
            record.record_id = self._next_id
            record.timestamp = datetime.now(timezone.utc).isoformat()
            payload = asdict(record)
            payload["kind"] = FeedbackKind(record.kind).value
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(payload) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._next_id += 1
            return record.record_id

    def records(self) -> list[FeedbackRecord]:
        if not self.path.exists():
            return []
        out: list[FeedbackRecord] = []
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            payload = json.loads(line)
            payload["kind"] = FeedbackKind(payload["kind"])
            out.append(FeedbackRecord(**payload))
        return out


def record_feedback(store: FeedbackStore, record: FeedbackRecord) -> int:
    return store.append(record)


def _context_documents(
    record: FeedbackRecord, corpus: Corpus | None
) -> list[Document]:
    if corpus is None:
        return []
    docs = []
    for doc_id in record.context_doc_ids:
        doc = corpus.get(doc_id)
        if doc is not None:
            docs.append(doc)
    return docs


def export_training_data(
    store: FeedbackStore,
    kind: FeedbackKind | None = None,
    corpus: Corpus | None = None,
) -> list[str]:
    """Render stored feedback as line-delimited training records.

    Verdict overrides become labeled (claim, document) pairs in the
    evaluation-pair format (loadable via ``scifact.load_pairs``); answer
    edits become (question, context, corrected answer) generation
    examples. Pure function of store contents: re-export is identical.
    """
    lines: list[str] = []
    for record in store.records():
        record_kind = FeedbackKind(record.kind)
        if kind is not None and record_kind is not kind:
            continue
        if record_kind is FeedbackKind.VERDICT_OVERRIDE:
            context = _context_documents(record, corpus)
            claims = parse_answer(record.answer_text, context).claims
            claim = claims[record.claim_index]
            doc_ids = [record.doc_id] if record.doc_id else claim.references
            for doc_id in doc_ids:
                lines.append(
                    json.dumps(
                        {
                            "claim_id": record.record_id,
                            "claim": claim.text,
                            "doc_id": doc_id,
                            "label": record.corrected_value,
                        }
                    )
                )
        else:
            lines.append(
                json.dumps(
                    {
                        "question": record.question,
                        "context_doc_ids": record.context_doc_ids,
                        "answer": record.corrected_value,
                    }
                )
            )
    return lines
