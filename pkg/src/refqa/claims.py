"""Parse generated answers into per-sentence claims with references.

Two reference syntaxes are recognized: parenthesized PUBMED markers
(``(PUBMED:554433)``, possibly several ids per parenthesis) and bracket
numbers (``[1]``) resolved against the context documents, 1-based.
Markers are recorded with their raw offsets so the original answer can
be reconstructed byte-for-byte.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .corpus import Document, split_sentences

_PUBMED_MARKER_RE = re.compile(
    r"\(\s*PUBMED\s*:\s*\d+(?:\s*[;,]?\s*PUBMED\s*:\s*\d+)*\s*\)", re.IGNORECASE
)
_BRACKET_MARKER_RE = re.compile(r"\[(\d+)\]")
_DIGITS_RE = re.compile(r"\d+")


@dataclass(frozen=True)
class Marker:
    """A reference marker at its exact position in the raw answer."""

    start: int
    end: int
    text: str


@dataclass
class Claim:
    text: str  # marker-free, whitespace-normalized
    raw_span: tuple[int, int]
    references: list[str] = field(default_factory=list)
    unreferenced: bool = True
    markers: list[Marker] = field(default_factory=list)


@dataclass
class ParsedAnswer:
    raw_text: str
    claims: list[Claim] = field(default_factory=list)
    unknown_references: list[tuple[int, str]] = field(default_factory=list)


@dataclass
class _Extraction:
    markers: list[Marker]
    references: list[str]  # resolved + syntactically-valid ids, deduped
    unknown: list[str]  # ids/numbers that resolve to nothing in context
    cleaned: str


def _find_markers(text: str, base: int) -> list[Marker]:
    markers = [
        Marker(base + m.start(), base + m.end(), m.group(0))
        for m in _PUBMED_MARKER_RE.finditer(text)
    ]
    markers.extend(
        Marker(base + m.start(), base + m.end(), m.group(0))
        for m in _BRACKET_MARKER_RE.finditer(text)
    )
    markers.sort(key=lambda m: m.start)
    return markers


def _extract(text: str, base: int, context_ids: list[str]) -> _Extraction:
    markers = _find_markers(text, base)
    references: list[str] = []
    unknown: list[str] = []
    for marker in markers:
        if marker.text.startswith("("):
            ids = _DIGITS_RE.findall(marker.text)
            for doc_id in ids:
                if doc_id not in references:
                    references.append(doc_id)
                if doc_id not in context_ids and doc_id not in unknown:
                    unknown.append(doc_id)
        else:
            number = int(marker.text[1:-1])
            if 1 <= number <= len(context_ids):
                doc_id = context_ids[number - 1]
                if doc_id not in references:
                    references.append(doc_id)
            elif marker.text[1:-1] not in unknown:
                unknown.append(marker.text[1:-1])
    pieces: list[str] = []
    cursor = 0
    for marker in markers:
        # Drop the whitespace run glued to the marker's left so removal
        # leaves no stray gap before trailing punctuation.
        pieces.append(text[cursor : marker.start - base].rstrip())
        cursor = marker.end - base
    pieces.append(text[cursor:])
    cleaned = " ".join("".join(pieces).split())
    return _Extraction(markers, references, unknown, cleaned)


def extract_references(
    sentence: str, context_docs: list[Document]
) -> tuple[list[str], str]:
    """References and marker-free text of one sentence.

    PUBMED ids are returned even when absent from the context; bracket
    numbers out of range resolve to nothing (they surface through
    ``parse_answer`` as unknown references).
    """
    context_ids = [d.doc_id for d in context_docs]
    result = _extract(sentence, 0, context_ids)
    return result.references, result.cleaned


def _is_marker_only(extraction: _Extraction) -> bool:
    return bool(extraction.markers) and not any(
        ch.isalnum() for ch in extraction.cleaned
    )


def parse_answer(raw: str, context_docs: list[Document]) -> ParsedAnswer:
    """Sentence-split an answer and attach references per claim.

    Marker-only segments (a citation "sentence" with no prose of its own)
    bind to the preceding claim. Parsing is total: any input yields a
    ParsedAnswer, possibly with zero claims.
    """
    context_ids = [d.doc_id for d in context_docs]
    parsed = ParsedAnswer(raw_text=raw)
    if not raw:
        return parsed
    claim_unknowns: list[list[str]] = []
    for sentence in split_sentences(raw):
        extraction = _extract(sentence.text, sentence.start, context_ids)
        if parsed.claims and _is_marker_only(extraction):
            previous = parsed.claims[-1]
            previous.raw_span = (previous.raw_span[0], sentence.end)
            previous.markers.extend(extraction.markers)
            for doc_id in extraction.references:
                if doc_id not in previous.references:
                    previous.references.append(doc_id)
            previous.unreferenced = not previous.references
            for doc_id in extraction.unknown:
                if doc_id not in claim_unknowns[-1]:
                    claim_unknowns[-1].append(doc_id)
            continue
        parsed.claims.append(
            Claim(
                text=extraction.cleaned,
                raw_span=(sentence.start, sentence.end),
                references=extraction.references,
                unreferenced=not extraction.references,
                markers=extraction.markers,
            )
        )
        claim_unknowns.append(extraction.unknown)
    for index, unknowns in enumerate(claim_unknowns):
        parsed.unknown_references.extend((index, doc_id) for doc_id in unknowns)
    return parsed
