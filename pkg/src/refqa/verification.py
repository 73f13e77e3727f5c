"""Three-class claim verification against cited abstracts.

Each (claim, referenced document) pair is classified SUPPORT /
CONTRADICT / NO_EVIDENCE by a pluggable backend; per-claim status is
aggregated with contradiction-first precedence, and the most similar
abstract sentences are surfaced as evidence highlights.
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Protocol

import httpx
import numpy as np

from .claims import Claim, ParsedAnswer
from .corpus import Corpus, Document, split_sentences
from .embeddings import EmbeddingBackend
from .errors import BackendError, TransportError, VerificationError
from .tokenization import content_words, tokenize

_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?")

NEGATION_TOKENS = frozenset({
    "no", "not", "never", "cannot", "without", "none", "neither", "nor",
    "lack", "lacks", "lacked", "absent", "absence", "fail", "fails", "failed",
    "unable",
})


class VerdictLabel(str, Enum):
    SUPPORT = "SUPPORT"
    CONTRADICT = "CONTRADICT"
    NO_EVIDENCE = "NO_EVIDENCE"


class ClaimStatus(str, Enum):
    VERIFIED = "VERIFIED"
    FLAGGED_CONTRADICTION = "FLAGGED_CONTRADICTION"
    FLAGGED_NO_EVIDENCE = "FLAGGED_NO_EVIDENCE"
    UNREFERENCED = "UNREFERENCED"


@dataclass(frozen=True)
class Verdict:
    label: VerdictLabel
    confidence: float = 1.0


@dataclass(frozen=True)
class EvidenceHighlight:
    doc_id: str
    sentences: tuple[tuple[str, float], ...]  # (text, similarity), non-increasing


class NLIBackend(Protocol):
    name: str

    def classify(
        self, premise_title: str, premise_abstract: str, hypothesis_claim: str
    ) -> Verdict:
        ...


def build_nli_input(claim: str, doc: Document) -> tuple[str, str]:
    """(hypothesis, premise) pair; premise is title then abstract.

    Special tokens (CLS/separators) are the backend's concern.
    """
    if not claim or not claim.strip():
        raise ValueError("claim text is empty")
    return claim, f"{doc.title} {doc.abstract}"


def verify_pair(
    backend: NLIBackend, claim: Claim, doc: Document, retries: int = 2
) -> Verdict:
    """Classify one (claim, document) pair, retrying transport failures."""
    if doc.doc_id not in claim.references:
        raise ValueError(f"doc {doc.doc_id} is not referenced by the claim")
    hypothesis, _ = build_nli_input(claim.text, doc)
    last: TransportError | None = None
    for _ in range(retries + 1):
        try:
            return backend.classify(doc.title, doc.abstract, hypothesis)
        except TransportError as exc:
            last = exc
    raise VerificationError(doc.doc_id, last, claim_text=claim.text)


def aggregate_verdicts(
    verdicts: Iterable[Verdict | VerdictLabel], unreferenced: bool
) -> ClaimStatus:
    """Contradiction-first precedence: CONTRADICT > SUPPORT > NO_EVIDENCE."""
    if unreferenced:
        return ClaimStatus.UNREFERENCED
    labels = [getattr(v, "label", v) for v in verdicts]
    if not labels:
        raise ValueError("a referenced claim needs at least one verdict")
    if VerdictLabel.CONTRADICT in labels:
        return ClaimStatus.FLAGGED_CONTRADICTION
    if VerdictLabel.SUPPORT in labels:
        return ClaimStatus.VERIFIED
    return ClaimStatus.FLAGGED_NO_EVIDENCE


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 0.0
    union = a | b
    return len(a & b) / len(union) if union else 0.0


def highlight_evidence(
    claim: Claim,
    doc: Document,
    k: int = 3,
    embedding_backend: EmbeddingBackend | None = None,
) -> EvidenceHighlight:
    """Top-k abstract sentences most similar to the claim.

    Cosine over the embedding backend when one is configured, otherwise
    content-word Jaccard. Ties break by sentence position.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if not doc.sentences:
        raise ValueError(f"doc {doc.doc_id} has no sentences")
    scored: list[tuple[float, int, str]] = []
    if embedding_backend is not None:
        claim_vec = np.asarray(embedding_backend.embed(claim.text), dtype=np.float64)
        claim_norm = float(np.linalg.norm(claim_vec))
        for pos, sentence in enumerate(doc.sentences):
            vec = np.asarray(embedding_backend.embed(sentence.text), dtype=np.float64)
            denom = claim_norm * float(np.linalg.norm(vec))
            cosine = float(claim_vec @ vec) / denom if denom > 0 else 0.0
            scored.append((max(0.0, min(1.0, cosine)), pos, sentence.text))
    else:
        claim_words = set(content_words(claim.text))
        for pos, sentence in enumerate(doc.sentences):
            score = _jaccard(claim_words, set(content_words(sentence.text)))
            scored.append((score, pos, sentence.text))
    scored.sort(key=lambda item: (-item[0], item[1]))
    top = tuple((text, score) for score, _, text in scored[:k])
    return EvidenceHighlight(doc_id=doc.doc_id, sentences=top)


def _coverage(claim_text: str, premise_text: str) -> float:
    claim_words = set(content_words(claim_text))
    if not claim_words:
        return 0.0
    premise_tokens = set(tokenize(premise_text))
    return len(claim_words & premise_tokens) / len(claim_words)


def _best_sentence(claim_text: str, doc: Document) -> str:
    claim_words = set(content_words(claim_text))
    best_text, best_overlap = "", -1
    for sentence in doc.sentences:
        overlap = len(claim_words & set(tokenize(sentence.text)))
        if overlap > best_overlap:
            best_text, best_overlap = sentence.text, overlap
    return best_text


def numeric_divergence(
    claim_text: str, doc: Document, coverage_threshold: float = 0.6
) -> bool:
    """Metadata-only warning: the claim matches the abstract well enough
    to look supported, yet cites numbers the premise does not contain."""
    claim_numbers = set(_NUMBER_RE.findall(claim_text))
    if not claim_numbers:
        return False
    if _coverage(claim_text, doc.full_text) < coverage_threshold:
        return False
    premise_numbers = set(_NUMBER_RE.findall(doc.full_text))
    return not claim_numbers.issubset(premise_numbers)


@dataclass
class PairVerdict:
    doc_id: str
    verdict: Verdict
    unknown_source: bool = False
    numeric_divergence: bool = False


@dataclass
class VerifiedClaim:
    claim: Claim
    verdicts: list[PairVerdict]
    status: ClaimStatus
    highlights: list[EvidenceHighlight]


@dataclass
class VerifiedAnswer:
    parsed: ParsedAnswer
    results: list[VerifiedClaim] = field(default_factory=list)


def verify_answer(
    parsed: ParsedAnswer,
    corpus: Corpus,
    backend: NLIBackend,
    highlight_k: int = 3,
    embedding_backend: EmbeddingBackend | None = None,
    concurrency: int = 4,
    retries: int = 2,
) -> VerifiedAnswer:
    """Verify every referenced claim of a parsed answer.

    References outside the context documents become unknown-source
    NO_EVIDENCE verdicts. Pair classifications fan out over a thread
    pool; results are joined in (claim, reference) order, so output never
    depends on completion timing.
    """
    unknown = set(parsed.unknown_references)
    jobs: list[tuple[int, Claim, Document]] = []
    for index, claim in enumerate(parsed.claims):
        if claim.unreferenced:
            continue
        for doc_id in claim.references:
            if (index, doc_id) in unknown:
                continue
            doc = corpus.get(doc_id)
            if doc is None:
                # Context docs always come from the corpus; a miss means
                # the caller mixed corpora. Surface it as unknown-source.
                unknown.add((index, doc_id))
                continue
            jobs.append((index, claim, doc))

    verdicts_by_pair: dict[tuple[int, str], Verdict] = {}
    if jobs:
        workers = max(1, min(concurrency, len(jobs)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                (index, doc, pool.submit(verify_pair, backend, claim, doc, retries))
                for index, claim, doc in jobs
            ]
            for index, doc, future in futures:
                try:
                    verdicts_by_pair[(index, doc.doc_id)] = future.result()
                except VerificationError as exc:
                    exc.claim_index = index
                    raise

    results: list[VerifiedClaim] = []
    for index, claim in enumerate(parsed.claims):
        pair_verdicts: list[PairVerdict] = []
        highlights: list[EvidenceHighlight] = []
        for doc_id in claim.references:
            if (index, doc_id) in unknown:
                pair_verdicts.append(
                    PairVerdict(
                        doc_id=doc_id,
                        verdict=Verdict(VerdictLabel.NO_EVIDENCE, 0.0),
                        unknown_source=True,
                    )
                )
                continue
            doc = corpus.get(doc_id)
            pair_verdicts.append(
                PairVerdict(
                    doc_id=doc_id,
                    verdict=verdicts_by_pair[(index, doc_id)],
                    numeric_divergence=numeric_divergence(claim.text, doc),
                )
            )
            if doc.sentences:
                highlights.append(
                    highlight_evidence(claim, doc, highlight_k, embedding_backend)
                )
        status = aggregate_verdicts(
            [pv.verdict for pv in pair_verdicts], claim.unreferenced
        )
        results.append(
            VerifiedClaim(
                claim=claim,
                verdicts=pair_verdicts,
                status=status,
                highlights=highlights,
            )
        )
    return VerifiedAnswer(parsed=parsed, results=results)


class ScriptedNLIBackend:
    """Fixture-table backend: exact (claim text, optional title) -> verdict."""

    name = "scripted-nli"

    def __init__(self, rules: list[dict] | None = None, default: VerdictLabel | None = None):
        self.rules = rules or []
        self.default = default

    def classify(
        self, premise_title: str, premise_abstract: str, hypothesis_claim: str
    ) -> Verdict:
        for rule in self.rules:
            if rule["claim"] != hypothesis_claim:
                continue
            if rule.get("title") is not None and rule["title"] != premise_title:
                continue
            return Verdict(
                VerdictLabel(rule["label"]), float(rule.get("confidence", 1.0))
            )
        if self.default is not None:
            return Verdict(self.default, 1.0)
        raise BackendError(self.name, f"no rule for claim {hypothesis_claim!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedNLIBackend":
        """Load JSONL rules; a line ``{"default": "<label>"}`` sets the
        fallback verdict for unmatched claims."""
        rules: list[dict] = []
        default: VerdictLabel | None = None
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            if "default" in row:
                default = VerdictLabel(row["default"])
            else:
                rules.append(row)
        return cls(rules=rules, default=default)


class HeuristicNLIBackend:
    """Offline baseline driven by content-word coverage.

    Coverage of the claim's content words by the premise >= threshold
    means SUPPORT, unless negation presence differs between the claim and
    the best-matching abstract sentence, which flips to CONTRADICT.
    Anything below threshold is NO_EVIDENCE.
    """

    name = "baseline"

    def __init__(
        self,
        support_threshold: float = 0.6,
        negations: frozenset[str] = NEGATION_TOKENS,
    ):
        if not 0.0 < support_threshold <= 1.0:
            raise ValueError("support_threshold must be in (0, 1]")
        self.support_threshold = support_threshold
        self.negations = negations

    def classify(
        self, premise_title: str, premise_abstract: str, hypothesis_claim: str
    ) -> Verdict:
        premise = f"{premise_title} {premise_abstract}"
        coverage = _coverage(hypothesis_claim, premise)
        if coverage < self.support_threshold:
            return Verdict(VerdictLabel.NO_EVIDENCE, 1.0 - coverage)
        doc = Document(
            doc_id="0",
            title=premise_title,
            abstract=premise_abstract,
            sentences=tuple(split_sentences(premise_abstract)),
        )
        best = _best_sentence(hypothesis_claim, doc)
        claim_negated = bool(set(tokenize(hypothesis_claim)) & self.negations)
        evidence_negated = bool(set(tokenize(best)) & self.negations)
        if claim_negated != evidence_negated:
            return Verdict(VerdictLabel.CONTRADICT, coverage)
        return Verdict(VerdictLabel.SUPPORT, coverage)


class RemoteNLIBackend:
    """HTTP client speaking the NLI wire contract:
    ``{premise, hypothesis} -> {label, confidence}``."""

    def __init__(self, url: str, timeout: float = 60.0, client: httpx.Client | None = None):
        self.url = url
        self.name = f"nli @ {url}"
        self._client = client or httpx.Client(timeout=timeout)

    def classify(
        self, premise_title: str, premise_abstract: str, hypothesis_claim: str
    ) -> Verdict:
        body = {
            "premise": f"{premise_title} {premise_abstract}",
            "hypothesis": hypothesis_claim,
        }
        try:
            response = self._client.post(self.url, json=body)
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise TransportError(self.name, str(exc)) from exc
        payload = response.json()
        try:
            label = VerdictLabel(str(payload["label"]).upper())
        except (KeyError, ValueError) as exc:
            raise BackendError(self.name, f"bad label in response: {payload}") from exc
        return Verdict(label, float(payload.get("confidence", 1.0)))
