from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import EXEMPLAR_ANSWER, build_corpus, fuzzed_answer, reinsert_markers
from refqa.claims import extract_references, parse_answer


@pytest.fixture()
def context_docs():
    corpus = build_corpus(
        [
            ("10", "Ten", "Abstract ten."),
            ("20", "Twenty", "Abstract twenty."),
            ("554433", "Breast", "Breast cancer genetics."),
            ("665544", "Kinase", "Kinase targets."),
        ]
    )
    return list(corpus)


class TestExtractReferences:
    def test_pubmed_marker_removed(self, context_docs):
        refs, cleaned = extract_references(
            "BRAC1, BRAC2 are well studied targets (PUBMED:554433).", context_docs
        )
        assert refs == ["554433"]
        assert cleaned == "BRAC1, BRAC2 are well studied targets."

    def test_bracket_numbers_map_one_based(self, context_docs):
        refs, cleaned = extract_references("Aspirin helps [1][2].", context_docs[:2])
        assert refs == ["10", "20"]
        assert cleaned == "Aspirin helps."

    def test_no_markers(self, context_docs):
        refs, cleaned = extract_references("No markers here.", context_docs)
        assert refs == []
        assert cleaned == "No markers here."

    def test_multi_id_marker_with_separators(self, context_docs):
        refs, cleaned = extract_references(
            "Both help (PUBMED:10, PUBMED:20; PUBMED:10).", context_docs
        )
        assert refs == ["10", "20"]
        assert cleaned == "Both help."

    def test_mid_sentence_marker(self, context_docs):
        refs, cleaned = extract_references(
            "Genes (PUBMED:10) are studied carefully.", context_docs
        )
        assert refs == ["10"]
        assert cleaned == "Genes are studied carefully."

    def test_unknown_pubmed_id_still_returned(self, context_docs):
        refs, _ = extract_references("Claim (PUBMED:999999).", context_docs)
        assert refs == ["999999"]

    def test_out_of_range_bracket_not_a_reference(self, context_docs):
        refs, cleaned = extract_references("Claim [9].", context_docs[:2])
        assert refs == []
        assert cleaned == "Claim."

    def test_case_insensitive_pubmed(self, context_docs):
        refs, _ = extract_references("Works (pubmed:10).", context_docs)
        assert refs == ["10"]


class TestParseAnswer:
    def test_exemplar_answer(self, context_docs):
        parsed = parse_answer(EXEMPLAR_ANSWER, context_docs)
        assert len(parsed.claims) == 3
        s1, s2, s3 = parsed.claims
        assert s1.unreferenced and s1.references == []
        assert s2.references == ["554433"] and not s2.unreferenced
        assert s3.references == ["665544"] and not s3.unreferenced
        assert parsed.unknown_references == []

    def test_empty_answer(self):
        parsed = parse_answer("", [])
        assert parsed.claims == []
        assert parsed.unknown_references == []

    def test_unknown_reference_collected(self, context_docs):
        parsed = parse_answer("This cites nothing real (PUBMED:999999).", context_docs)
        assert parsed.claims[0].references == ["999999"]
        assert parsed.unknown_references == [(0, "999999")]

    def test_out_of_range_bracket_collected(self, context_docs):
        parsed = parse_answer("Cites [7] confidently.", context_docs[:2])
        assert parsed.claims[0].references == []
        assert parsed.claims[0].unreferenced
        assert parsed.unknown_references == [(0, "7")]

    def test_marker_only_segment_binds_to_previous(self, context_docs):
        parsed = parse_answer("Aspirin reduces fever. (PUBMED:10)", context_docs)
        assert len(parsed.claims) == 1
        claim = parsed.claims[0]
        assert claim.references == ["10"]
        assert claim.text == "Aspirin reduces fever."
        assert claim.raw_span == (0, len("Aspirin reduces fever. (PUBMED:10)"))

    def test_duplicate_ids_deduplicated(self, context_docs):
        parsed = parse_answer("Stated twice (PUBMED:10)(PUBMED:10).", context_docs)
        assert parsed.claims[0].references == ["10"]

    def test_claims_ordered_and_nonoverlapping(self, context_docs):
        parsed = parse_answer(EXEMPLAR_ANSWER, context_docs)
        spans = [c.raw_span for c in parsed.claims]
        assert spans == sorted(spans)
        for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
            assert e1 <= s2

    @settings(max_examples=200, deadline=None)
    @given(st.text(max_size=400))
    def test_parsing_is_total(self, text):
        parsed = parse_answer(text, [])
        for claim in parsed.claims:
            for doc_id in claim.references:
                assert doc_id.isdigit()


class TestReconstruction:
    def test_fuzzed_roundtrip(self, context_docs):
        rng = random.Random(99)
        for _ in range(200):
            raw = fuzzed_answer(rng, context_size=len(context_docs))
            parsed = parse_answer(raw, context_docs)
            markers = [m for claim in parsed.claims for m in claim.markers]
            assert reinsert_markers(raw, markers) == raw
            # nothing silently dropped: every reference is either known
            # or listed among unknown_references
            context_ids = {d.doc_id for d in context_docs}
            unknown = {doc_id for _, doc_id in parsed.unknown_references}
            for claim in parsed.claims:
                for doc_id in claim.references:
                    assert doc_id in context_ids or doc_id in unknown

    def test_marker_spans_match_raw_text(self, context_docs):
        raw = "One claim [1]. Another (PUBMED:554433, PUBMED:20)!"
        parsed = parse_answer(raw, context_docs)
        for claim in parsed.claims:
            for marker in claim.markers:
                assert raw[marker.start : marker.end] == marker.text
