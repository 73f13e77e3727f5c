from __future__ import annotations

import random
from pathlib import Path

import pytest

from refqa.corpus import Corpus, load_corpus, make_document


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        print(f"\n[ACCEPTANCE] {name}: {outcome}")

FIXTURES = Path(__file__).parent / "fixtures"

EXEMPLAR_ANSWER = (
    "Several genes play role in breast cancer. "
    "For example BRAC1, BRAC2 are well studied targets (PUBMED:554433). "
    "The other targets involve IRAK4, CAS2 and HMPA (PUBMED:665544)."
)


@pytest.fixture(scope="session")
def fixture_corpus_path() -> Path:
    return FIXTURES / "corpus.jsonl"


@pytest.fixture()
def fixture_corpus(fixture_corpus_path) -> Corpus:
    return load_corpus(fixture_corpus_path)


def build_corpus(records: list[tuple[str, str, str]]) -> Corpus:
    """In-memory corpus from (doc_id, title, abstract) triples."""
    corpus = Corpus()
    for doc_id, title, abstract in records:
        corpus.add(make_document(doc_id, title, abstract))
    return corpus


_WORDS = (
    "gene protein cell tumor kinase pathway receptor mutation therapy dose "
    "trial cohort risk marker enzyme tissue signal antibody response model"
).split()


def fuzzed_answer(rng: random.Random, context_size: int = 4) -> str:
    """Random multi-sentence answer with PUBMED and bracket markers placed
    at sentence ends, mid-sentence, and on marker-only segments."""
    parts: list[str] = []
    for _ in range(rng.randint(1, 6)):
        words = [rng.choice(_WORDS) for _ in range(rng.randint(2, 9))]
        # mid-sentence marker
        if rng.random() < 0.25:
            words.insert(rng.randrange(1, len(words) + 1), _random_marker(rng, context_size))
        sentence = " ".join(words)
        # marker glued before the terminator
        if rng.random() < 0.5:
            sentence += " " + _random_marker(rng, context_size)
        sentence += rng.choice([".", ".", ".", "!", "?"])
        parts.append(sentence)
        # marker-only segment after the terminator
        if rng.random() < 0.2:
            parts.append(_random_marker(rng, context_size))
    return " ".join(parts)


def _random_marker(rng: random.Random, context_size: int) -> str:
    if rng.random() < 0.5:
        ids = [str(rng.randint(1, 999999)) for _ in range(rng.randint(1, 3))]
        separator = rng.choice([", ", "; ", " ", ","])
        return "(" + separator.join(f"PUBMED:{i}" for i in ids) + ")"
    return f"[{rng.randint(1, context_size + 2)}]"


def reinsert_markers(raw: str, markers) -> str:
    """Reconstruct the raw answer from its marker-stripped form; the
    inverse check for the parser's recorded marker spans."""
    markers = sorted(markers, key=lambda m: m.start)
    stripped_parts = []
    cursor = 0
    for marker in markers:
        stripped_parts.append(raw[cursor : marker.start])
        cursor = marker.end
    stripped_parts.append(raw[cursor:])
    stripped = "".join(stripped_parts)
    # Insertion points in stripped-text coordinates; applying them
    # back-to-front keeps earlier positions valid.
    positions = []
    removed = 0
    for marker in markers:
        positions.append(marker.start - removed)
        removed += len(marker.text)
    rebuilt = stripped
    for marker, position in reversed(list(zip(markers, positions))):
        rebuilt = rebuilt[:position] + marker.text + rebuilt[position:]
    return rebuilt
