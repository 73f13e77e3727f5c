"""refqa: referenced scientific question answering with verification.

Pipeline: hybrid BM25 + dense retrieval over abstract records, prompt
assembly and generation through a pluggable backend, per-sentence
reference parsing, and 3-class verification of every (claim, cited
document) pair with evidence highlights and user-feedback capture.
"""

__version__ = "0.1.0"

from .corpus import Corpus, Document, load_corpus, split_sentences
from .retrieval import Retriever, ScoredHit, question_to_query
from .claims import Claim, ParsedAnswer, extract_references, parse_answer
from .verification import (
    ClaimStatus,
    Verdict,
    VerdictLabel,
    aggregate_verdicts,
    verify_answer,
)
from .engine import Engine
from .config import EngineConfig, load_config

__all__ = [
    "Corpus",
    "Document",
    "load_corpus",
    "split_sentences",
    "Retriever",
    "ScoredHit",
    "question_to_query",
    "Claim",
    "ParsedAnswer",
    "extract_references",
    "parse_answer",
    "ClaimStatus",
    "Verdict",
    "VerdictLabel",
    "aggregate_verdicts",
    "verify_answer",
    "Engine",
    "EngineConfig",
    "load_config",
    "__version__",
]
