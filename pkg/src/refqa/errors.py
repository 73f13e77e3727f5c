"""Exception types shared across the engine."""

from __future__ import annotations


class RefqaError(Exception):
    """Base class for all engine errors."""


class CorpusError(RefqaError):
    """Corpus file cannot be loaded (empty file, duplicate ids, bad path)."""


class DuplicateDocIdError(CorpusError):
    def __init__(self, doc_id: str):
        super().__init__(f"duplicate doc_id {doc_id!r} in corpus")
        self.doc_id = doc_id


class UnanswerableQueryError(RefqaError):
    """Question is empty or reduces to nothing after stopword removal."""


class IndexPersistenceError(RefqaError):
    """Index file is missing, corrupt, or has an unsupported version."""


class OversizedContextError(RefqaError):
    """Prompt does not fit the context budget even with one document."""


class EmptyAnswerError(RefqaError):
    """Generation backend returned empty text."""


class TransportError(RefqaError):
    """A remote backend call failed at the transport level (retryable)."""

    def __init__(self, backend: str, detail: str):
        super().__init__(f"{backend}: {detail}")
        self.backend = backend
        self.retryable = True


class BackendError(RefqaError):
    """A backend failed in a non-transport way (bad response, no match)."""

    def __init__(self, backend: str, detail: str):
        super().__init__(f"{backend}: {detail}")
        self.backend = backend


class VerificationError(RefqaError):
    """Verification of a (claim, document) pair failed after retries."""

    def __init__(
        self,
        doc_id: str,
        cause: Exception,
        claim_text: str = "",
        claim_index: int | None = None,
    ):
        where = f"claim {claim_index}" if claim_index is not None else f"claim {claim_text!r}"
        super().__init__(f"{where} vs doc {doc_id}: {cause}")
        self.doc_id = doc_id
        self.cause = cause
        self.claim_text = claim_text
        self.claim_index = claim_index


class EvaluationError(RefqaError):
    """Backend failed mid-evaluation; carries how many pairs completed."""

    def __init__(self, completed: int, cause: Exception):
        super().__init__(f"backend failed after {completed} pairs: {cause}")
        self.completed = completed
        self.cause = cause


class FeedbackValidationError(RefqaError):
    """Feedback record violates a kind invariant; names the offending field."""

    def __init__(self, field: str, detail: str):
        super().__init__(f"{field}: {detail}")
        self.field = field


class ConfigError(RefqaError):
    """Engine configuration is missing or fails validation."""
