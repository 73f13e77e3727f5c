export type VerdictLabel = "SUPPORT" | "CONTRADICT" | "NO_EVIDENCE";

export type ClaimStatus =
  | "VERIFIED"
  | "FLAGGED_CONTRADICTION"
  | "FLAGGED_NO_EVIDENCE"
  | "UNREFERENCED";

export interface PairVerdict {
  doc_id: string;
  label: VerdictLabel;
  confidence: number;
  unknown_source: boolean;
}

export interface HighlightSentence {
  text: string;
  score: number;
}

export interface Highlight {
  doc_id: string;
  sentences: HighlightSentence[];
}

export interface ClaimView {
  index: number;
  text: string;
  references: string[];
  unreferenced: boolean;
  status: ClaimStatus;
  verdicts: PairVerdict[];
  numeric_divergence_warnings: string[];
  highlights: Highlight[];
}

export interface RetrievedHit {
  doc_id: string;
  lexical_score: number;
  semantic_score: number;
  fused_score: number;
}

export interface AskResponse {
  question: string;
  answer_id: string;
  answer_text: string;
  claims: ClaimView[];
  retrieved: RetrievedHit[];
  timings: Record<string, number>;
  detail?: string;
}

export interface SentenceSpan {
  text: string;
  start: number;
  end: number;
}

export interface DocumentRecord {
  doc_id: string;
  title: string;
  abstract: string;
  sentences: SentenceSpan[];
}

export type FeedbackKind = "VERDICT_OVERRIDE" | "ANSWER_EDIT";

export interface FeedbackRequest {
  answer_id: string;
  kind: FeedbackKind;
  original_value: string;
  corrected_value: string;
  claim_index?: number;
  doc_id?: string;
  user?: string;
}
