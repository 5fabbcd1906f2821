/** Typed client for the review service; the only network surface the UI has. */

export interface BatchCounts {
  pending: number;
  accepted: number;
  rejected: number;
  required: number;
}

export interface BatchSummary {
  id: string;
  target: string;
  pct: number;
  counts: BatchCounts;
}

export interface PendingItem {
  index: number;
  seed: number;
  url: string;
  target_attribute: string;
  positive: string;
  positive_excerpt: string;
  choices: Record<string, number>;
}

export interface PendingPage {
  total: number;
  page: number;
  items: PendingItem[];
  counts: BatchCounts;
}

export interface DecisionResponse {
  ok: boolean;
  counts: BatchCounts;
}

export type Verdict = "accept" | "reject";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    throw new ApiError(resp.status, `${resp.status} ${resp.statusText}`);
  }
  return (await resp.json()) as T;
}

export class ReviewApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private call(path: string, init?: RequestInit): Promise<Response> {
    return this.fetchImpl(`${this.base}${path}`, init);
  }

  async batches(): Promise<BatchSummary[]> {
    return asJson(await this.call("/api/batches"));
  }

  async pending(batchId: string, page = 0, pageSize = 200): Promise<PendingPage> {
    const q = `status=pending&page=${page}&page_size=${pageSize}`;
    return asJson(
      await this.call(`/api/batches/${encodeURIComponent(batchId)}/images?${q}`),
    );
  }

  async decide(
    batchId: string,
    index: number,
    verdict: Verdict,
    reviewer = "",
  ): Promise<DecisionResponse> {
    return asJson(
      await this.call(`/api/batches/${encodeURIComponent(batchId)}/decisions`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ index, verdict, reviewer }),
      }),
    );
  }

  async discards(batchId: string): Promise<{ batch: string; rejected: number[] }> {
    return asJson(
      await this.call(`/api/batches/${encodeURIComponent(batchId)}/discards`),
    );
  }
}
