"""Document collection: loading, validation, and sentence segmentation.

The corpus file is UTF-8 JSON lines, one record per line with string
fields ``doc_id`` (digits), ``title``, and ``abstract``. Records that
fail validation are skipped and reported; duplicate ids abort the load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusError, DuplicateDocIdError


@dataclass(frozen=True)
class Sentence:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    abstract: str
    sentences: tuple[Sentence, ...]

    @property
    def full_text(self) -> str:
        """Title and abstract joined; the unit retrieval and NLI operate on."""
        return f"{self.title} {self.abstract}"


@dataclass(frozen=True)
class SkippedRecord:
    line_number: int
    reason: str


@dataclass
class Corpus:
    documents: list[Document] = field(default_factory=list)
    id_index: dict[str, int] = field(default_factory=dict)
    skipped: list[SkippedRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.id_index

    def get(self, doc_id: str) -> Document | None:
        pos = self.id_index.get(doc_id)
        return self.documents[pos] if pos is not None else None

    def add(self, doc: Document) -> None:
        if doc.doc_id in self.id_index:
            raise DuplicateDocIdError(doc.doc_id)
        self.id_index[doc.doc_id] = len(self.documents)
        self.documents.append(doc)


# Dotted tokens that never terminate a sentence (lowercased, final dot kept).
ABBREVIATIONS = frozenset({
    "e.g.", "i.e.", "etc.", "vs.", "cf.", "ca.", "al.", "approx.",
    "fig.", "figs.", "eq.", "eqs.", "no.", "nos.", "ref.", "refs.",
    "dr.", "prof.", "mr.", "mrs.", "ms.", "st.",
})

_TERMINATORS = ".!?"
_CLOSERS = "\"')]’”"


def _is_boundary_dot(text: str, i: int) -> bool:
    # A dot glued to a following alphanumeric is internal: decimals (3.5),
    # acronyms (U.S.), and the inner dots of "e.g." all stay in-sentence.
    if i + 1 < len(text) and text[i + 1].isalnum():
        return False
    k = i - 1
    while k >= 0 and (text[k].isalnum() or text[k] == "."):
        k -= 1
    candidate = text[k + 1 : i + 1].lower()
    return candidate not in ABBREVIATIONS


def split_sentences(text: str) -> list[Sentence]:
    """Rule-based sentence segmentation with exact source offsets.

    Spans end at a terminator run (``.`` ``!`` ``?`` plus any closing
    quotes/brackets glued to it) or at end of text. Offsets index into
    ``text`` directly, so every span satisfies
    ``text[s.start:s.end] == s.text`` and the gaps between spans are
    whitespace only.
    """
    spans: list[tuple[int, int]] = []
    n = len(text)
    start: int | None = None
    i = 0
    while i < n:
        ch = text[i]
        if start is None and not ch.isspace():
            start = i
        if start is not None and ch in _TERMINATORS:
            if ch == "." and not _is_boundary_dot(text, i):
                i += 1
                continue
            j = i
            while j + 1 < n and text[j + 1] in _TERMINATORS:
                j += 1
            while j + 1 < n and text[j + 1] in _CLOSERS:
                j += 1
            spans.append((start, j + 1))
            start = None
            i = j + 1
            continue
        i += 1
    if start is not None:
        end = n
        while end > start and text[end - 1].isspace():
            end -= 1
        if end > start:
            spans.append((start, end))
    return [Sentence(text[s:e], s, e) for s, e in spans]


def make_document(doc_id: str, title: str, abstract: str) -> Document:
    return Document(
        doc_id=doc_id,
        title=title,
        abstract=abstract,
        sentences=tuple(split_sentences(abstract)),
    )


def _validate_record(record: object) -> tuple[str, str, str]:
    if not isinstance(record, dict):
        raise ValueError("record is not an object")
    for key in ("doc_id", "title", "abstract"):
        if key not in record:
            raise ValueError(f"missing field {key!r}")
        if not isinstance(record[key], str):
            raise ValueError(f"field {key!r} is not a string")
    doc_id = record["doc_id"].strip()
    if not doc_id:
        raise ValueError("doc_id is empty")
    if not doc_id.isdigit():
        raise ValueError(f"doc_id {doc_id!r} is not digits")
    if not record["abstract"].strip():
        raise ValueError("abstract is empty")
    return doc_id, record["title"], record["abstract"]


def load_corpus(path: str | Path) -> Corpus:
    """Load a JSONL corpus file.

    Malformed records are skipped and collected in ``Corpus.skipped``;
    duplicate doc_ids raise immediately; a file yielding no documents
    raises ``CorpusError``.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")
    corpus = Corpus()
    with path.open(encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                doc_id, title, abstract = _validate_record(record)
            except (json.JSONDecodeError, ValueError) as exc:
                corpus.skipped.append(SkippedRecord(line_number, str(exc)))
                continue
            corpus.add(make_document(doc_id, title, abstract))
    if not corpus.documents:
        raise CorpusError(f"no valid documents in {path}")
    return corpus
