import type {
  FragmentPayload,
  SessionCreated,
  StateSnapshot,
  TranscriptSnapshot,
  TreeSnapshot,
  TurnEnvelope,
  WireError,
} from "./types.js";

export interface HttpResponse {
  status: number;
  json: unknown;
}

/** Transport hook: the app uses fetch, tests replay recorded exchanges. */
export type HttpFn = (method: string, path: string, body?: unknown) => Promise<HttpResponse>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export function fetchHttp(baseUrl: string): HttpFn {
  return async (method, path, body) => {
    const response = await fetch(baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    return { status: response.status, json: await response.json() };
  };
}

function unwrap<T>(response: HttpResponse, expected: number): T {
  if (response.status !== expected) {
    const err = response.json as WireError;
    throw new ApiError(response.status, err?.code ?? "unknown", err?.message ?? "request failed");
  }
  return response.json as T;
}

/** Thin typed client over the dialogue API; performs no dialogue logic. */
export class ApiClient {
  constructor(private readonly http: HttpFn) {}

  async createSession(query: string, config?: Record<string, unknown>): Promise<SessionCreated> {
    const body: Record<string, unknown> = { query };
    if (config) body.config = config;
    return unwrap(await this.http("POST", "/sessions", body), 201);
  }

  async postTurn(sessionId: string, utterance: string): Promise<TurnEnvelope> {
    return unwrap(await this.http("POST", `/sessions/${sessionId}/turns`, { utterance }), 200);
  }

  async navigate(
    sessionId: string,
    operation: string,
    target?: string,
    steps?: number,
  ): Promise<StateSnapshot> {
    const body: Record<string, unknown> = { operation };
    if (target !== undefined) body.target = target;
    if (steps !== undefined) body.steps = steps;
    return unwrap(await this.http("POST", `/sessions/${sessionId}/navigate`, body), 200);
  }

  async getTree(sessionId: string): Promise<TreeSnapshot> {
    return unwrap(await this.http("GET", `/sessions/${sessionId}/tree`), 200);
  }

  async getState(sessionId: string): Promise<StateSnapshot> {
    return unwrap(await this.http("GET", `/sessions/${sessionId}/state`), 200);
  }

  async getTranscript(sessionId: string): Promise<TranscriptSnapshot> {
    return unwrap(await this.http("GET", `/sessions/${sessionId}/transcript`), 200);
  }

  async getFragment(fragmentId: string): Promise<FragmentPayload> {
    return unwrap(await this.http("GET", `/fragments/${fragmentId}`), 200);
  }

  async deleteSession(sessionId: string): Promise<void> {
    unwrap(await this.http("DELETE", `/sessions/${sessionId}`), 200);
  }
}
