import type { ClaimStatus, FeedbackRequest, VerdictLabel } from "./types";

/** Visual treatment per claim status (Okabe-Ito colorblind-safe palette;
 * statuses also differ by label text and border style, never color alone). */
export const STATUS_META: Record<
  ClaimStatus,
  { label: string; color: string; tone: "neutral" | "strong" | "soft" | "info" }
> = {
  VERIFIED: { label: "Verified", color: "#0072B2", tone: "neutral" },
  FLAGGED_CONTRADICTION: {
    label: "Contradicted by source",
    color: "#D55E00",
    tone: "strong",
  },
  FLAGGED_NO_EVIDENCE: {
    label: "No supporting evidence",
    color: "#E69F00",
    tone: "soft",
  },
  UNREFERENCED: { label: "No citation", color: "#56B4E9", tone: "info" },
};

export const VERDICT_OPTIONS: VerdictLabel[] = [
  "SUPPORT",
  "CONTRADICT",
  "NO_EVIDENCE",
];

/** Display-only mirror of the service's aggregation precedence, used for
 * the optimistic badge after an override. The service stays the source
 * of truth for everything it returns. */
export function statusForVerdicts(
  labels: VerdictLabel[],
  unreferenced: boolean,
): ClaimStatus {
  if (unreferenced) return "UNREFERENCED";
  if (labels.includes("CONTRADICT")) return "FLAGGED_CONTRADICTION";
  if (labels.includes("SUPPORT")) return "VERIFIED";
  return "FLAGGED_NO_EVIDENCE";
}

/** Client-side double-submit guard: an identical feedback payload within
 * the same answer view is a no-op. */
export class SubmissionGuard {
  private seen = new Set<string>();

  key(request: FeedbackRequest): string {
    return JSON.stringify([
      request.answer_id,
      request.kind,
      request.claim_index ?? null,
      request.doc_id ?? null,
      request.original_value,
      request.corrected_value,
    ]);
  }

  /** True exactly once per distinct payload. */
  shouldSend(request: FeedbackRequest): boolean {
    const key = this.key(request);
    if (this.seen.has(key)) return false;
    this.seen.add(key);
    return true;
  }

  forget(request: FeedbackRequest): void {
    this.seen.delete(this.key(request));
  }

  reset(): void {
    this.seen.clear();
  }
}
