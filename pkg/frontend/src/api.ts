// Thin fetch client for the conductor service. Mutations carry a request_id
// and may be retried with the same id: the server applies them at most once.

import type {
  ClockInfo, CommandBody, CommandOutcome, EventRecord, LiveState,
  RenderIndex, SessionListEntry, SessionSummary, StartSessionPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

const RETRYABLE_ATTEMPTS = 3;

export class ServiceApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let code = "http_error";
      let message = `${response.status}`;
      try {
        const body = await response.json();
        code = body.code ?? code;
        message = body.message ?? JSON.stringify(body);
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(code, message, response.status);
    }
    return response;
  }

  private async postJson<T>(path: string, payload: unknown): Promise<T> {
    // network failures are retried with the same body (same request_id), so
    // a command is never applied twice
    let lastError: unknown;
    for (let attempt = 0; attempt < RETRYABLE_ATTEMPTS; attempt += 1) {
      try {
        const response = await this.request(path, {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify(payload),
        });
        return (await response.json()) as T;
      } catch (error) {
        if (error instanceof ApiError) throw error;
        lastError = error; // connection problem: retry, idempotent by id
      }
    }
    throw lastError;
  }

  startSession(payload: StartSessionPayload): Promise<CommandOutcome> {
    return this.postJson("/sessions", payload);
  }

  command(sessionId: string, body: CommandBody): Promise<CommandOutcome> {
    return this.postJson(`/sessions/${sessionId}/commands`, body);
  }

  async state(sessionId: string): Promise<LiveState> {
    const response = await this.request(`/sessions/${sessionId}/state`);
    return (await response.json()) as LiveState;
  }

  async sessions(): Promise<SessionListEntry[]> {
    const response = await this.request("/sessions");
    return (await response.json()) as SessionListEntry[];
  }

  async summary(sessionId: string): Promise<SessionSummary> {
    const response = await this.request(`/sessions/${sessionId}/summary`);
    return (await response.json()) as SessionSummary;
  }

  async clock(): Promise<ClockInfo> {
    const response = await this.request("/clock");
    return (await response.json()) as ClockInfo;
  }

  async advanceClock(seconds: number): Promise<ClockInfo> {
    const response = await this.request("/clock/advance", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ seconds }),
    });
    return (await response.json()) as ClockInfo;
  }

  async log(sessionId: string): Promise<string> {
    const response = await this.request(`/sessions/${sessionId}/log`);
    return response.text();
  }

  async table(sessionId: string, name: string): Promise<string> {
    const response = await this.request(`/sessions/${sessionId}/tables/${name}`);
    return response.text();
  }

  async renderIndex(sessionId: string): Promise<RenderIndex> {
    const response = await this.request(`/sessions/${sessionId}/renders.json`);
    return (await response.json()) as RenderIndex;
  }

  renderUrl(sessionId: string, seq: number): string {
    return `${this.baseUrl}/sessions/${sessionId}/renders/${seq}.ppm`;
  }

  bundleUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/bundle.zip`;
  }

  async fetchRender(sessionId: string, seq: number): Promise<Uint8Array> {
    const response = await this.request(`/sessions/${sessionId}/renders/${seq}.ppm`);
    return new Uint8Array(await response.arrayBuffer());
  }

  /** Replay the recorded event stream; with follow, keep polling the server. */
  async *events(sessionId: string, since = 0, follow = false): AsyncGenerator<EventRecord> {
    const params = new URLSearchParams({ since: String(since), follow: String(follow) });
    const response = await this.request(`/sessions/${sessionId}/events?${params}`);
    const reader = response.body?.getReader();
    if (!reader) {
      for (const line of (await response.text()).split("\n")) {
        if (line.trim()) yield JSON.parse(line) as EventRecord;
      }
      return;
    }
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { value, done } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let index = buffer.indexOf("\n");
      while (index >= 0) {
        const line = buffer.slice(0, index).trim();
        buffer = buffer.slice(index + 1);
        if (line) yield JSON.parse(line) as EventRecord;
        index = buffer.indexOf("\n");
      }
    }
    if (buffer.trim()) yield JSON.parse(buffer) as EventRecord;
  }
}

export function newRequestId(): string {
  if (typeof crypto !== "undefined" && crypto.randomUUID) {
    return crypto.randomUUID();
  }
  return `rq-${Date.now()}-${Math.random().toString(36).slice(2)}`;
}
