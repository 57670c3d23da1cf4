/** Typed client for the query service. The fetch function is injectable
 * so tests can run against fixture services. */

export interface EntitySuggestion {
  id: string;
  name: string;
}

export interface PassageResult {
  passage_id: string;
  doc_id: string;
  score: number;
  heading: string;
  text: string;
  sentences: string[];
  sentence_scores: number[];
}

export interface QueryResponse {
  results: PassageResult[];
  latency_ms: number;
  warning?: string;
}

export interface HistogramResponse {
  doc_id: string;
  sentences: string[];
  combined: number[];
  entity: number[];
  aspect: number[];
}

export interface EntityRef {
  id?: string;
  mention?: string;
}

export interface HttpResponse {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<HttpResponse>;

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

async function parseError(resp: HttpResponse): Promise<ApiError> {
  try {
    const body = (await resp.json()) as { code?: string; message?: string };
    return new ApiError(body.code ?? "error", body.message ?? `HTTP ${resp.status}`, resp.status);
  } catch {
    return new ApiError("error", `HTTP ${resp.status}`, resp.status);
  }
}

export class ApiClient {
  constructor(
    public baseUrl: string,
    private readonly fetchFn: FetchLike,
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  async entities(q: string, limit = 8): Promise<EntitySuggestion[]> {
    const body = await this.getJson<{ results: EntitySuggestion[] }>(
      `/entities?q=${encodeURIComponent(q)}&limit=${limit}`,
    );
    return body.results;
  }

  async aspects(q: string, limit = 8): Promise<string[]> {
    const body = await this.getJson<{ results: string[] }>(
      `/aspects?q=${encodeURIComponent(q)}&limit=${limit}`,
    );
    return body.results;
  }

  async query(entity: EntityRef, aspect: string, topK: number): Promise<QueryResponse> {
    const resp = await this.fetchFn(`${this.baseUrl}/query`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ entity, aspect, top_k: topK }),
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as QueryResponse;
  }

  async histogram(docId: string, entity: string, aspect: string): Promise<HistogramResponse> {
    return this.getJson<HistogramResponse>(
      `/documents/${encodeURIComponent(docId)}/histogram` +
        `?entity=${encodeURIComponent(entity)}&aspect=${encodeURIComponent(aspect)}`,
    );
  }
}
