import type {
  AskResponse,
  DocumentRecord,
  FeedbackRequest,
} from "./types";

export class ApiError extends Error {
  status: number;
  stage?: string;
  field?: string;

  constructor(status: number, message: string, stage?: string, field?: string) {
    super(message);
    this.status = status;
    this.stage = stage;
    this.field = field;
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let message = `${response.status} ${response.statusText}`;
  let stage: string | undefined;
  let field: string | undefined;
  try {
    const body = await response.json();
    const detail = body?.detail;
    if (typeof detail === "string") {
      message = detail;
    } else if (detail && typeof detail === "object") {
      message = detail.error ?? JSON.stringify(detail);
      stage = detail.stage;
      field = detail.field;
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(response.status, message, stage, field);
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    await raiseForStatus(response);
    return (await response.json()) as T;
  }

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    await raiseForStatus(response);
    return (await response.json()) as T;
  }

  ask(question: string): Promise<AskResponse> {
    return this.post<AskResponse>("/api/ask", { question });
  }

  feedback(request: FeedbackRequest): Promise<{ record_id: number }> {
    return this.post<{ record_id: number }>("/api/feedback", request);
  }

  document(docId: string): Promise<DocumentRecord> {
    return this.get<DocumentRecord>(`/api/documents/${docId}`);
  }

  health(): Promise<{ status: string }> {
    return this.get<{ status: string }>("/api/health");
  }
}
