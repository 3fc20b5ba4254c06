/**
 * Typed client for the teaching service REST API.
 *
 * Every mutation and score comes from the server; the client performs no
 * certainty math of its own.
 */

export interface SchemaFeature {
  name: string;
  domain: string[];
}

export interface Schema {
  features: SchemaFeature[];
}

export interface LabelResult {
  changed: boolean;
  ambiguity_before: number;
  ambiguity_after: number;
  examples: number;
  leaves: number;
}

export interface CandidateReport {
  values: string[];
  prediction: number;
  signed_ic: number;
  per_leaf: Record<string, { A: number; A_prime: number }>;
  accepted_plus: string[];
  accepted_minus: string[];
}

export interface ProblemView {
  states: { values: string[] }[][];
}

export interface SuggestResult {
  problem: ProblemView;
  score: number;
  complete: boolean;
  pool_size: number;
}

export interface LeafSummary {
  key: string;
  label: number;
  size: number;
  ambiguity: number;
}

export interface SessionState {
  id: string;
  schema: Schema;
  training_count: number;
  ambiguity: number;
  ambiguity_trace: { examples: number; ambiguity: number }[];
  leaves: LeafSummary[];
  tree: unknown;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class TeachingApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      const message =
        (payload as { error?: { message?: string } }).error?.message ??
        `request failed with status ${response.status}`;
      throw new ApiError(response.status, message);
    }
    return payload as T;
  }

  createSession(schema: Schema, pool?: Record<string, number>): Promise<{ id: string }> {
    return this.call("POST", "/sessions", { schema, pool });
  }

  submitLabel(sessionId: string, values: string[], label: 0 | 1): Promise<LabelResult> {
    return this.call("POST", `/sessions/${sessionId}/labels`, { values, label });
  }

  scoreCandidates(
    sessionId: string,
    candidates: { values: string[] }[],
  ): Promise<{ candidates: CandidateReport[] }> {
    return this.call("POST", `/sessions/${sessionId}/candidates`, { candidates });
  }

  suggestNext(sessionId: string): Promise<SuggestResult> {
    return this.call("POST", `/sessions/${sessionId}/suggest`);
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.call("GET", `/sessions/${sessionId}/state`);
  }
}
