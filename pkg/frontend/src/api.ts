/** Typed client for the cubenav session service. */

import type {
  AnnotationJson,
  ApiErrorBody,
  ContextJson,
  OperationJson,
  PreferenceJson,
  SchemaJson,
  StepResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.code = body.code;
    this.status = status;
    this.detail = body.detail;
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, payload as ApiErrorBody);
    }
    return payload as T;
  }

  createSession(user: string): Promise<{ sessionId: string; user: string }> {
    return this.request("POST", "/sessions", { user });
  }

  applyOperation(sessionId: string, op: OperationJson): Promise<StepResponse> {
    return this.request("POST", `/sessions/${sessionId}/operations`, op);
  }

  acceptRecommendation(sessionId: string, index: number, stepToken: number): Promise<StepResponse> {
    return this.request("POST", `/sessions/${sessionId}/recommendations/${index}/accept`, {
      stepToken,
    });
  }

  getContext(sessionId: string): Promise<ContextJson> {
    return this.request("GET", `/sessions/${sessionId}/context`);
  }

  listAnnotations(params?: { context?: string; thread?: string }): Promise<AnnotationJson[]> {
    const query = new URLSearchParams();
    if (params?.context) query.set("context", params.context);
    if (params?.thread) query.set("thread", params.thread);
    const suffix = query.toString() ? `?${query}` : "";
    return this.request("GET", `/annotations${suffix}`);
  }

  postAnnotation(body: {
    kind: string;
    content: string;
    author: string;
    anchor: string;
    parent?: string;
  }): Promise<AnnotationJson> {
    return this.request("POST", "/annotations", body);
  }

  listPreferences(owner?: string): Promise<PreferenceJson[]> {
    const suffix = owner ? `?owner=${encodeURIComponent(owner)}` : "";
    return this.request("GET", `/preferences${suffix}`);
  }

  postPreference(body: {
    owner: string;
    kind: string;
    order: unknown[];
    context?: Record<string, unknown>;
  }): Promise<PreferenceJson> {
    return this.request("POST", "/preferences", body);
  }

  deletePreference(id: string): Promise<{ deleted: string }> {
    return this.request("DELETE", `/preferences/${id}`);
  }

  getSchema(): Promise<SchemaJson> {
    return this.request("GET", "/schema");
  }
}
