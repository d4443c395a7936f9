/** Thin typed client for the planning service. */
import {
  AnnotationPatchResponseSchema,
  GraphDoc,
  GraphSchema,
  HistorySchema,
  Insights,
  InsightsSchema,
  PlannerErrorPayload,
  PlannerErrorSchema,
  QueryResponse,
  QueryResponseSchema,
} from "./types.js";

export type FetchLike = (
  url: string,
  init: { method: string; headers: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;

/** Raised when the planner refuses a question; carries the staged payload. */
export class PlanningError extends Error {
  constructor(readonly payload: PlannerErrorPayload) {
    super(payload.message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<unknown> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        "Content-Type": "application/json",
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const doc = (await response.json()) as Record<string, unknown>;
    if (response.status === 400 && doc.detail) {
      throw new PlanningError(PlannerErrorSchema.parse(doc.detail));
    }
    if (response.status >= 400) {
      throw new Error(`HTTP ${response.status} on ${method} ${path}`);
    }
    return doc;
  }

  async getGraph(graphId: string): Promise<GraphDoc> {
    return GraphSchema.parse(await this.request("GET", `/v1/graphs/${graphId}`));
  }

  async query(
    graphId: string,
    question: string,
    options: { dryRun?: boolean; execute?: boolean } = {},
  ): Promise<QueryResponse> {
    const doc = await this.request("POST", `/v1/graphs/${graphId}/query`, {
      question,
      dry_run: options.dryRun ?? false,
      execute: options.execute ?? false,
    });
    return QueryResponseSchema.parse(doc);
  }

  async annotate(
    graphId: string,
    kind: string,
    target: Record<string, unknown>,
    payload: Record<string, unknown>,
  ): Promise<number> {
    const doc = await this.request(
      "PATCH",
      `/v1/graphs/${graphId}/annotations`,
      { kind, target, payload },
    );
    return AnnotationPatchResponseSchema.parse(doc).version;
  }

  async history(graphId: string) {
    const doc = await this.request(
      "GET",
      `/v1/history?graph_id=${encodeURIComponent(graphId)}`,
    );
    return HistorySchema.parse(doc).history;
  }

  async insights(graphId: string): Promise<Insights> {
    const doc = await this.request(
      "GET",
      `/v1/insights?graph_id=${encodeURIComponent(graphId)}`,
    );
    return InsightsSchema.parse(doc);
  }
}
