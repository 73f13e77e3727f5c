"""SciFact-style dataset ingestion, cleaning, and the metrics harness.

The claims file is JSONL with per-claim ``cited_doc_ids`` and optional
per-document ``evidence`` entries; the corpus file is JSONL with per-doc
``title`` and ``abstract`` (string or list of sentences). Loading emits
one labeled pair per (claim, cited document): supporting evidence maps
to SUPPORT, refuting to CONTRADICT, no evidence entry to NO_EVIDENCE.
"""

from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus, make_document
from .errors import EvaluationError
from .verification import NLIBackend, VerdictLabel, build_nli_input

# Table-style class order used in every report.
CLASS_ORDER = (
    VerdictLabel.NO_EVIDENCE,
    VerdictLabel.SUPPORT,
    VerdictLabel.CONTRADICT,
)

# Published reference points for externally fine-tuned verifier models
# (weighted precision, recall, F1). Reproducing them requires those
# models; they are comparison constants for reports, not targets.
REFERENCE_WEIGHTED_SCORES = {
    "deberta-large-fine-tuned": (0.88, 0.88, 0.88),
    "xlm-roberta-large-fine-tuned": (0.87, 0.85, 0.85),
    "gpt-4-zero-shot": (0.81, 0.80, 0.79),
}

# Class distribution of the cleaned dataset reported alongside the above.
REFERENCE_CLASS_DISTRIBUTION = {
    VerdictLabel.NO_EVIDENCE: 0.36,
    VerdictLabel.SUPPORT: 0.42,
    VerdictLabel.CONTRADICT: 0.22,
}

_LABEL_ALIASES = {
    "SUPPORT": VerdictLabel.SUPPORT,
    "SUPPORTS": VerdictLabel.SUPPORT,
    "CONTRADICT": VerdictLabel.CONTRADICT,
    "REFUTES": VerdictLabel.CONTRADICT,
    "NO_EVIDENCE": VerdictLabel.NO_EVIDENCE,
    "NOT_ENOUGH_INFO": VerdictLabel.NO_EVIDENCE,
}


@dataclass(frozen=True)
class LabeledPair:
    claim_id: int
    claim_text: str
    doc_id: str
    gold_label: VerdictLabel


@dataclass(frozen=True)
class SkippedPair:
    claim_id: int
    doc_id: str
    reason: str


@dataclass
class ScifactLoadResult:
    pairs: list[LabeledPair]
    corpus: Corpus
    skipped: list[SkippedPair] = field(default_factory=list)
    conflicts: list[tuple[int, str]] = field(default_factory=list)  # (claim_id, doc_id)


def _normalize_label(raw: str) -> VerdictLabel:
    label = _LABEL_ALIASES.get(str(raw).upper())
    if label is None:
        raise ValueError(f"unknown evidence label {raw!r}")
    return label


def load_scifact_corpus(path: str | Path) -> Corpus:
    """Corpus JSONL with ``doc_id``, ``title``, ``abstract`` (str or list)."""
    corpus = Corpus()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        abstract = record["abstract"]
        if isinstance(abstract, list):
            abstract = " ".join(s.strip() for s in abstract)
        corpus.add(
            make_document(str(record["doc_id"]), record.get("title", ""), abstract)
        )
    return corpus


def load_scifact(
    claims_path: str | Path, corpus_path: str | Path
) -> ScifactLoadResult:
    """One pair per (claim, cited document), labels from evidence.

    Claims citing documents absent from the corpus are skipped and
    reported. A document carrying both supporting and refuting evidence
    for the same claim yields one pair per label and is flagged.
    """
    corpus = load_scifact_corpus(corpus_path)
    result = ScifactLoadResult(pairs=[], corpus=corpus)
    for line in Path(claims_path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        claim_id = int(record["id"])
        claim_text = record["claim"]
        evidence = record.get("evidence") or {}
        labels_by_doc: dict[str, list[VerdictLabel]] = {}
        for doc_id, entries in evidence.items():
            labels: list[VerdictLabel] = []
            for entry in entries:
                label = _normalize_label(entry["label"])
                if label not in labels:
                    labels.append(label)
            labels_by_doc[str(doc_id)] = labels
        doc_ids = [str(d) for d in record.get("cited_doc_ids", [])]
        for doc_id in labels_by_doc:
            if doc_id not in doc_ids:
                doc_ids.append(doc_id)
        for doc_id in doc_ids:
            if doc_id not in corpus:
                result.skipped.append(
                    SkippedPair(claim_id, doc_id, "cited doc not in corpus")
                )
                continue
            labels = labels_by_doc.get(doc_id) or [VerdictLabel.NO_EVIDENCE]
            if len(labels) > 1:
                result.conflicts.append((claim_id, doc_id))
            for label in labels:
                result.pairs.append(LabeledPair(claim_id, claim_text, doc_id, label))
    return result


def clean_dataset(pairs: list[LabeledPair]) -> list[LabeledPair]:
    """Collapse exact (claim_text, doc_id, label) duplicates, keeping the
    first occurrence. Idempotent; never changes a pair's label."""
    seen: set[tuple[str, str, VerdictLabel]] = set()
    cleaned: list[LabeledPair] = []
    for pair in pairs:
        if not pair.doc_id:
            raise ValueError(f"pair for claim {pair.claim_id} has no document")
        key = (pair.claim_text, pair.doc_id, pair.gold_label)
        if key in seen:
            continue
        seen.add(key)
        cleaned.append(pair)
    return cleaned


def class_distribution(pairs: list[LabeledPair]) -> dict[VerdictLabel, float]:
    if not pairs:
        raise ValueError("cannot compute a distribution over zero pairs")
    counts = {label: 0 for label in CLASS_ORDER}
    for pair in pairs:
        counts[pair.gold_label] += 1
    total = len(pairs)
    return {label: counts[label] / total for label in CLASS_ORDER}


def split_pairs(
    pairs: list[LabeledPair], eval_fraction: float, seed: int
) -> tuple[list[LabeledPair], list[LabeledPair]]:
    """Deterministic (rest, eval) split; the exact split the upstream
    models used is unknown, so seed and fraction are explicit knobs."""
    if not 0.0 < eval_fraction <= 1.0:
        raise ValueError("eval_fraction must be in (0, 1]")
    if eval_fraction == 1.0:
        return [], list(pairs)
    indices = list(range(len(pairs)))
    rng = random.Random(seed)
    rng.shuffle(indices)
    cut = max(1, round(len(pairs) * eval_fraction))
    chosen = set(indices[:cut])
    eval_set = [p for i, p in enumerate(pairs) if i in chosen]
    rest = [p for i, p in enumerate(pairs) if i not in chosen]
    return rest, eval_set


@dataclass
class MetricsReport:
    confusion: list[list[int]]  # rows = gold, cols = predicted, CLASS_ORDER
    precision: dict[VerdictLabel, float]
    recall: dict[VerdictLabel, float]
    f1: dict[VerdictLabel, float]
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    accuracy: float
    class_counts: dict[VerdictLabel, int]
    total: int


def compute_metrics(confusion: list[list[int]]) -> MetricsReport:
    """Per-class precision/recall/F1 plus gold-share weighted averages.

    Zero denominators yield 0 rather than NaN so degenerate fixtures
    still report cleanly.
    """
    if len(confusion) != 3 or any(len(row) != 3 for row in confusion):
        raise ValueError("confusion matrix must be 3x3")
    if any(cell < 0 for row in confusion for cell in row):
        raise ValueError("confusion matrix counts must be non-negative")
    total = sum(sum(row) for row in confusion)
    if total == 0:
        raise ValueError("confusion matrix is empty")
    precision: dict[VerdictLabel, float] = {}
    recall: dict[VerdictLabel, float] = {}
    f1: dict[VerdictLabel, float] = {}
    class_counts: dict[VerdictLabel, int] = {}
    for i, label in enumerate(CLASS_ORDER):
        col_sum = sum(confusion[j][i] for j in range(3))
        row_sum = sum(confusion[i])
        diag = confusion[i][i]
        p = diag / col_sum if col_sum > 0 else 0.0
        r = diag / row_sum if row_sum > 0 else 0.0
        precision[label] = p
        recall[label] = r
        f1[label] = 2 * p * r / (p + r) if p + r > 0 else 0.0
        class_counts[label] = row_sum
    weighted_p = weighted_r = weighted_f = 0.0
    for label in CLASS_ORDER:
        share = class_counts[label] / total
        weighted_p += share * precision[label]
        weighted_r += share * recall[label]
        weighted_f += share * f1[label]
    accuracy = sum(confusion[i][i] for i in range(3)) / total
    return MetricsReport(
        confusion=[list(row) for row in confusion],
        precision=precision,
        recall=recall,
        f1=f1,
        weighted_precision=weighted_p,
        weighted_recall=weighted_r,
        weighted_f1=weighted_f,
        accuracy=accuracy,
        class_counts=class_counts,
        total=total,
    )


def evaluate_backend(
    backend: NLIBackend,
    pairs: list[LabeledPair],
    corpus: Corpus,
    concurrency: int = 4,
) -> MetricsReport:
    """Classify every pair and tally the 3x3 confusion matrix.

    Backend calls fan out over a bounded pool; the matrix is reduced in
    pair order. A backend failure raises ``EvaluationError`` carrying how
    many pairs completed (in submission order) before the failure.
    """
    if not pairs:
        raise ValueError("no pairs to evaluate")
    index_of = {label: i for i, label in enumerate(CLASS_ORDER)}

    def classify(pair: LabeledPair) -> VerdictLabel:
        doc = corpus.get(pair.doc_id)
        if doc is None:
            raise ValueError(f"pair cites doc {pair.doc_id} missing from corpus")
        hypothesis, _ = build_nli_input(pair.claim_text, doc)
        return backend.classify(doc.title, doc.abstract, hypothesis).label

    confusion = [[0, 0, 0] for _ in range(3)]
    workers = max(1, min(concurrency, len(pairs)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(classify, pair) for pair in pairs]
        for completed, (pair, future) in enumerate(zip(pairs, futures)):
            try:
                predicted = future.result()
            except Exception as exc:
                raise EvaluationError(completed, exc) from exc
            confusion[index_of[pair.gold_label]][index_of[predicted]] += 1
    return compute_metrics(confusion)


def save_pairs(pairs: list[LabeledPair], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(
                json.dumps(
                    {
                        "claim_id": pair.claim_id,
                        "claim": pair.claim_text,
                        "doc_id": pair.doc_id,
                        "label": pair.gold_label.value,
                    }
                )
                + "\n"
            )


def load_pairs(path: str | Path) -> list[LabeledPair]:
    """Load the flat pair format emitted by ``save_pairs`` and by the
    feedback exporter."""
    pairs: list[LabeledPair] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        pairs.append(
            LabeledPair(
                claim_id=int(record["claim_id"]),
                claim_text=record["claim"],
                doc_id=str(record["doc_id"]),
                gold_label=_normalize_label(record["label"]),
            )
        )
    return pairs
