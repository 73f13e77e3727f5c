from __future__ import annotations

import itertools
import random

import pytest

from conftest import EXEMPLAR_ANSWER, build_corpus
from refqa.claims import Claim, parse_answer
from refqa.corpus import make_document
from refqa.embeddings import HashedTrigramEmbedding
from refqa.errors import TransportError, VerificationError
from refqa.verification import (
    ClaimStatus,
    HeuristicNLIBackend,
    ScriptedNLIBackend,
    Verdict,
    VerdictLabel,
    aggregate_verdicts,
    build_nli_input,
    highlight_evidence,
    numeric_divergence,
    verify_answer,
    verify_pair,
)

S, C, N = VerdictLabel.SUPPORT, VerdictLabel.CONTRADICT, VerdictLabel.NO_EVIDENCE


def claim_for(text, references):
    return Claim(
        text=text,
        raw_span=(0, len(text)),
        references=list(references),
        unreferenced=not references,
    )


class TestBuildNliInput:
    def test_title_then_abstract(self):
        doc = make_document("1", "T", "A.")
        assert build_nli_input("BRCA1 is a target.", doc) == ("BRCA1 is a target.", "T A.")

    def test_empty_claim_is_error(self):
        doc = make_document("1", "T", "A.")
        with pytest.raises(ValueError):
            build_nli_input("  ", doc)

    def test_title_always_precedes_abstract(self):
        for title, abstract in [("Alpha", "Beta."), ("X", "Y Z.")]:
            _, premise = build_nli_input("c", make_document("1", title, abstract))
            assert premise.index(title) < premise.index(abstract)


class FlakyBackend:
    name = "flaky"

    def __init__(self, failures: int, verdict=Verdict(S)):
        self.failures = failures
        self.calls = 0
        self.verdict = verdict

    def classify(self, title, abstract, claim):
        self.calls += 1
        if self.calls <= self.failures:
            raise TransportError(self.name, "connection reset")
        return self.verdict


class TestVerifyPair:
    DOC = make_document("42", "Title", "Aspirin reduces fever. It is cheap.")

    def test_scripted_verdict_returned(self):
        backend = ScriptedNLIBackend(default=C)
        claim = claim_for("Aspirin causes fever.", ["42"])
        assert verify_pair(backend, claim, self.DOC).label is C

    def test_identity_claim_supported_by_baseline(self):
        claim = claim_for("Aspirin reduces fever.", ["42"])
        verdict = verify_pair(HeuristicNLIBackend(), claim, self.DOC)
        assert verdict.label is S

    def test_zero_overlap_is_no_evidence(self):
        claim = claim_for("Quantum entanglement spans kilometers.", ["42"])
        verdict = verify_pair(HeuristicNLIBackend(), claim, self.DOC)
        assert verdict.label is N

    def test_transport_failures_retried(self):
        backend = FlakyBackend(failures=2)
        claim = claim_for("Aspirin reduces fever.", ["42"])
        assert verify_pair(backend, claim, self.DOC, retries=2).label is S
        assert backend.calls == 3

    def test_exhausted_retries_carry_identity(self):
        backend = FlakyBackend(failures=10)
        claim = claim_for("Aspirin reduces fever.", ["42"])
        with pytest.raises(VerificationError) as excinfo:
            verify_pair(backend, claim, self.DOC, retries=1)
        assert excinfo.value.doc_id == "42"
        assert "Aspirin" in excinfo.value.claim_text

    def test_unreferenced_doc_rejected(self):
        claim = claim_for("Aspirin reduces fever.", ["7"])
        with pytest.raises(ValueError):
            verify_pair(ScriptedNLIBackend(default=S), claim, self.DOC)


class TestAggregation:
    def test_support_plus_no_evidence_is_verified(self):
        assert aggregate_verdicts([S, N], False) is ClaimStatus.VERIFIED

    def test_contradiction_takes_precedence(self):
        assert aggregate_verdicts([S, C], False) is ClaimStatus.FLAGGED_CONTRADICTION

    def test_unreferenced_short_circuits(self):
        assert aggregate_verdicts([], True) is ClaimStatus.UNREFERENCED

    def test_empty_verdicts_referenced_is_error(self):
        with pytest.raises(ValueError):
            aggregate_verdicts([], False)

    def test_exhaustive_combinations_match_bruteforce(self):
        # independent restatement of the precedence rule
        def oracle(labels):
            if C in labels:
                return ClaimStatus.FLAGGED_CONTRADICTION
            if S in labels:
                return ClaimStatus.VERIFIED
            return ClaimStatus.FLAGGED_NO_EVIDENCE

        for n in (1, 2, 3):
            for combo in itertools.product([S, C, N], repeat=n):
                assert aggregate_verdicts(list(combo), False) is oracle(combo)

    def test_monotone_upgrades(self):
        rng = random.Random(5)
        for _ in range(500):
            labels = [rng.choice([S, C, N]) for _ in range(rng.randint(1, 5))]
            before = aggregate_verdicts(labels, False)
            upgradable = [i for i, l in enumerate(labels) if l is N]
            if upgradable:
                labels[rng.choice(upgradable)] = S
                after = aggregate_verdicts(labels, False)
                if before is ClaimStatus.VERIFIED:
                    assert after is ClaimStatus.VERIFIED
                assert (
                    after is not ClaimStatus.FLAGGED_NO_EVIDENCE
                    or before is ClaimStatus.FLAGGED_NO_EVIDENCE
                )
            labels.append(C)
            assert aggregate_verdicts(labels, False) is ClaimStatus.FLAGGED_CONTRADICTION


class TestHighlights:
    DOC = make_document(
        "9",
        "Fever trial",
        "Aspirin reduces fever. Placebo does nothing. Dosage was low. Costs stayed flat.",
    )

    def test_identical_sentence_ranked_first_with_similarity_one(self):
        claim = claim_for("Aspirin reduces fever.", ["9"])
        highlight = highlight_evidence(claim, self.DOC, k=2)
        assert highlight.sentences[0] == ("Aspirin reduces fever.", 1.0)

    def test_k_larger_than_sentence_count_returns_all(self):
        claim = claim_for("Aspirin reduces fever.", ["9"])
        highlight = highlight_evidence(claim, self.DOC, k=10)
        assert len(highlight.sentences) == 4

    def test_scores_non_increasing_and_from_doc(self):
        claim = claim_for("Aspirin dosage was low.", ["9"])
        highlight = highlight_evidence(claim, self.DOC, k=3)
        scores = [s for _, s in highlight.sentences]
        assert scores == sorted(scores, reverse=True)
        doc_sentences = {s.text for s in self.DOC.sentences}
        assert all(text in doc_sentences for text, _ in highlight.sentences)

    def test_handcomputed_jaccard_ordering(self):
        # claim content words: {aspirin, reduces, fever}
        # s1 {aspirin, reduces, fever}: J = 3/3 = 1.0
        # s2 {placebo, nothing}: J = 0/5
        # s3 {dosage, low}: J = 0/5
        # s4 {costs, stayed, flat}: J = 0/6
        claim = claim_for("Aspirin reduces fever.", ["9"])
        highlight = highlight_evidence(claim, self.DOC, k=4)
        assert [s for _, s in highlight.sentences] == [1.0, 0.0, 0.0, 0.0]
        assert highlight.sentences[0][0] == "Aspirin reduces fever."
        # zero-score ties keep sentence order
        assert [t for t, _ in highlight.sentences[1:]] == [
            "Placebo does nothing.",
            "Dosage was low.",
            "Costs stayed flat.",
        ]

    def test_embedding_similarity_identity(self):
        backend = HashedTrigramEmbedding(dimension=64)
        claim = claim_for("Aspirin reduces fever.", ["9"])
        highlight = highlight_evidence(claim, self.DOC, k=1, embedding_backend=backend)
        assert highlight.sentences[0][0] == "Aspirin reduces fever."
        assert highlight.sentences[0][1] == pytest.approx(1.0, abs=1e-9)


class TestNumericDivergence:
    def test_differing_number_with_high_coverage_warns(self):
        doc = make_document("3", "Dose study", "The dose was 3.5 mg per day. It was tolerated.")
        assert numeric_divergence("The dose was 4.5 mg per day.", doc)

    def test_matching_numbers_do_not_warn(self):
        doc = make_document("3", "Dose study", "The dose was 3.5 mg per day. It was tolerated.")
        assert not numeric_divergence("The dose was 3.5 mg per day.", doc)

    def test_no_numbers_never_warns(self):
        doc = make_document("3", "Dose study", "The dose was 3.5 mg per day.")
        assert not numeric_divergence("The dose was moderate.", doc)

    def test_low_coverage_does_not_warn(self):
        doc = make_document("3", "Dose study", "The dose was 3.5 mg per day.")
        assert not numeric_divergence("Quasar 7 shines brightly tonight.", doc)


class TestHeuristicBackend:
    def test_negation_mismatch_contradicts(self):
        backend = HeuristicNLIBackend()
        verdict = backend.classify(
            "Fever trial", "Aspirin reduces fever in adults.", "Aspirin does not reduce fever."
        )
        assert verdict.label is C

    def test_negation_on_both_sides_supports(self):
        backend = HeuristicNLIBackend()
        verdict = backend.classify(
            "Fever trial", "Aspirin does not reduce mortality.", "Aspirin does not reduce mortality."
        )
        assert verdict.label is S

    def test_pure_function(self):
        backend = HeuristicNLIBackend()
        args = ("T", "Aspirin reduces fever.", "Aspirin reduces fever.")
        assert backend.classify(*args) == backend.classify(*args)

    def test_threshold_configurable(self):
        strict = HeuristicNLIBackend(support_threshold=1.0)
        verdict = strict.classify("T", "Aspirin reduces fever.", "Aspirin reduces pain.")
        assert verdict.label is N


class TestVerifyAnswer:
    @pytest.fixture()
    def corpus(self):
        return build_corpus(
            [
                ("554433", "Breast", "BRAC1, BRAC2 are well studied targets. More text."),
                ("665544", "Kinase", "The other targets involve IRAK4. Trials are early."),
            ]
        )

    def test_all_support_verifies_referenced_claims(self, corpus):
        parsed = parse_answer(
            "First claim (PUBMED:554433). Second claim (PUBMED:665544).", list(corpus)
        )
        verified = verify_answer(parsed, corpus, ScriptedNLIBackend(default=S))
        assert [r.status for r in verified.results] == [
            ClaimStatus.VERIFIED,
            ClaimStatus.VERIFIED,
        ]

    def test_exemplar_with_scripted_contradiction(self, corpus):
        parsed = parse_answer(EXEMPLAR_ANSWER, list(corpus))
        backend = ScriptedNLIBackend(
            rules=[{"claim": "The other targets involve IRAK4, CAS2 and HMPA.", "label": "CONTRADICT"}],
            default=S,
        )
        verified = verify_answer(parsed, corpus, backend)
        assert [r.status for r in verified.results] == [
            ClaimStatus.UNREFERENCED,
            ClaimStatus.VERIFIED,
            ClaimStatus.FLAGGED_CONTRADICTION,
        ]

    def test_empty_parsed_answer(self, corpus):
        verified = verify_answer(parse_answer("", []), corpus, ScriptedNLIBackend(default=S))
        assert verified.results == []

    def test_unknown_reference_is_unknown_source_no_evidence(self, corpus):
        parsed = parse_answer("Cites a ghost (PUBMED:999999).", list(corpus))
        verified = verify_answer(parsed, corpus, ScriptedNLIBackend(default=S))
        result = verified.results[0]
        assert result.status is ClaimStatus.FLAGGED_NO_EVIDENCE
        assert result.verdicts[0].unknown_source
        assert result.verdicts[0].verdict.label is N

    def test_results_index_aligned_and_input_unchanged(self, corpus):
        parsed = parse_answer(EXEMPLAR_ANSWER, list(corpus))
        texts_before = [c.text for c in parsed.claims]
        verified = verify_answer(parsed, corpus, ScriptedNLIBackend(default=S))
        assert [c.text for c in parsed.claims] == texts_before
        assert [r.claim for r in verified.results] == parsed.claims

    def test_concurrent_runs_deterministic(self, corpus):
        parsed = parse_answer(
            "A (PUBMED:554433). B (PUBMED:665544). C (PUBMED:554433, PUBMED:665544).",
            list(corpus),
        )
        backend = HeuristicNLIBackend()
        first = verify_answer(parsed, corpus, backend, concurrency=4)
        second = verify_answer(parsed, corpus, backend, concurrency=1)
        assert [
            [(pv.doc_id, pv.verdict) for pv in r.verdicts] for r in first.results
        ] == [[(pv.doc_id, pv.verdict) for pv in r.verdicts] for r in second.results]

    def test_backend_error_annotated_with_claim_index(self, corpus):
        parsed = parse_answer("Only claim (PUBMED:554433).", list(corpus))
        backend = FlakyBackend(failures=99)
        with pytest.raises(VerificationError) as excinfo:
            verify_answer(parsed, corpus, backend, retries=0)
        assert excinfo.value.claim_index == 0
