// Thin typed client over the service's JSON API. The fetch implementation is
// injectable so tests run against a fake transport.

import type {
  AlertWire,
  HealthResponse,
  ScoreResponse,
  TransactionForm,
  WindowResponse,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface ApiOptions {
  fetch?: FetchLike;
  token?: string;
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;
  readonly token: string | undefined;

  constructor(base: string, opts: ApiOptions = {}) {
    this.base = base.replace(/\/+$/, "");
    this.fetchImpl = opts.fetch ?? ((url, init) => fetch(url, init));
    this.token = opts.token;
  }

  streamUrl(): string {
    // EventSource cannot set headers, so the token rides the query string
    const q = this.token ? `?token=${encodeURIComponent(this.token)}` : "";
    return `${this.base}/alerts/stream${q}`;
  }

  private headers(json: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (json) h["Content-Type"] = "application/json";
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init = {
      method,
      headers: this.headers(body !== undefined),
      ...(body !== undefined ? { body: JSON.stringify(body) } : {}),
    };
    let resp;
    try {
      resp = await this.fetchImpl(this.base + path, init);
    } catch (e) {
      throw new ApiError(0, "unreachable", `service unreachable: ${String(e)}`);
    }
    let data: unknown = null;
    try {
      data = await resp.json();
    } catch {
      // non-JSON error body; fall through with the status alone
    }
    if (!resp.ok) {
      const err = (data ?? {}) as { code?: string; message?: string };
      throw new ApiError(
        resp.status,
        err.code ?? `http_${resp.status}`,
        err.message ?? `request failed with ${resp.status}`,
      );
    }
    return data as T;
  }

  async health(): Promise<HealthResponse> {
    return this.request("GET", "/health");
  }

  async listAlerts(status?: string): Promise<AlertWire[]> {
    const q = status ? `?status=${encodeURIComponent(status)}` : "";
    const data = await this.request<{ alerts: AlertWire[] }>(
      "GET",
      `/alerts${q}`,
    );
    return data.alerts;
  }

  async getAlert(alertId: number): Promise<AlertWire> {
    return this.request("GET", `/alerts/${alertId}`);
  }

  async decide(
    alertId: number,
    decision: "allowed" | "blocked",
    inspector: string,
  ): Promise<AlertWire> {
    return this.request("POST", `/alerts/${alertId}/decision`, {
      decision,
      inspector,
    });
  }

  async postTransaction(form: TransactionForm): Promise<ScoreResponse> {
    return this.request("POST", "/transactions", form);
  }

  async getWindow(pan: string): Promise<WindowResponse> {
    return this.request("GET", `/customers/${encodeURIComponent(pan)}/window`);
  }
}

/** True when a decide() failure means someone else already closed the alert. */
export function isAlreadyDecided(e: unknown): boolean {
  return e instanceof ApiError && e.status === 409 && e.code === "already_decided";
}
