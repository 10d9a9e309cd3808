/** Typed client for the session service. The UI never derives numbers
 * itself; everything rendered comes back from these calls. */

import type {
  CatalogView,
  ContextsApplied,
  CubeBuilt,
  MatchReportView,
  MaterializeResult,
  NewDefinition,
  SessionCreated,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let detail = text;
      try {
        detail = (JSON.parse(text) as { detail?: string }).detail ?? text;
      } catch {
        /* plain-text error body */
      }
      throw new ApiError(response.status, detail);
    }
    return JSON.parse(text) as T;
  }

  createSession(query: string): Promise<SessionCreated> {
    return this.request("POST", "/sessions", { query });
  }

  selectContexts(
    sessionId: string,
    selections: Record<string, string[]>,
  ): Promise<ContextsApplied> {
    return this.request("POST", `/sessions/${sessionId}/contexts`, { selections });
  }

  selectConnections(sessionId: string, chosen: string[]): Promise<{ ok: boolean }> {
    return this.request("POST", `/sessions/${sessionId}/connections`, { chosen });
  }

  materialize(sessionId: string): Promise<MaterializeResult> {
    return this.request("POST", `/sessions/${sessionId}/materialize`);
  }

  match(sessionId: string): Promise<MatchReportView> {
    return this.request("GET", `/sessions/${sessionId}/match`);
  }

  defineEntry(sessionId: string, definition: NewDefinition): Promise<MatchReportView> {
    return this.request("POST", `/sessions/${sessionId}/catalog`, definition);
  }

  buildCube(
    sessionId: string,
    facts: string[] | null,
    dimensions: string[] | null,
  ): Promise<CubeBuilt> {
    return this.request("POST", `/sessions/${sessionId}/cube`, {
      facts,
      dimensions,
    });
  }

  catalog(): Promise<CatalogView> {
    return this.request("GET", "/catalog");
  }

  tableUrl(path: string): string {
    return this.baseUrl + path;
  }
}
