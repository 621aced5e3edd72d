// Live alert subscription over server-sent events. The browser EventSource
// reconnects on transient drops by itself; this wrapper adds status
// reporting and a fresh connection when the source gives up entirely.
// The EventSource constructor and timer are injectable for tests.

import type { AlertWire } from "./types.js";

export interface EventSourceLike {
  addEventListener(type: string, listener: (ev: { data?: string }) => void): void;
  close(): void;
  readonly readyState: number;
}

export type EventSourceFactory = (url: string) => EventSourceLike;
export type FeedStatus = "connecting" | "live" | "reconnecting";

const CLOSED = 2;
const RETRY_MS = 2000;

export interface FeedOptions {
  eventSource?: EventSourceFactory;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
  retryMs?: number;
}

export class AlertFeed {
  private source: EventSourceLike | null = null;
  private stopped = false;
  private readonly makeSource: EventSourceFactory;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private readonly retryMs: number;

  constructor(
    private readonly url: string,
    private readonly onAlert: (alert: AlertWire) => void,
    private readonly onStatus: (status: FeedStatus) => void,
    opts: FeedOptions = {},
  ) {
    this.makeSource =
      opts.eventSource ??
      ((u: string) => new EventSource(u) as unknown as EventSourceLike);
    this.schedule = opts.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
    this.retryMs = opts.retryMs ?? RETRY_MS;
  }

  start(): void {
    this.stopped = false;
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    this.source?.close();
    this.source = null;
  }

  private connect(): void {
    if (this.stopped) return;
    this.onStatus("connecting");
    const source = this.makeSource(this.url);
    this.source = source;
    source.addEventListener("open", () => this.onStatus("live"));
    source.addEventListener("alert", (ev) => {
      if (!ev.data) return;
      let alert: AlertWire;
      try {
        alert = JSON.parse(ev.data) as AlertWire;
      } catch {
        return; // malformed frame; the next event will catch us up
      }
      this.onAlert(alert);
    });
    source.addEventListener("error", () => {
      if (this.stopped) return;
      this.onStatus("reconnecting");
      if (source.readyState === CLOSED) {
        this.schedule(() => this.connect(), this.retryMs);
      }
    });
  }
}
