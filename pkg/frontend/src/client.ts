/** Console-side gateway client: one socket, auto-reconnect with backoff,
 * per-topic handlers, and promise-based service calls. */

import {
  callFrame,
  Envelope,
  parseServerFrame,
  pubFrame,
  ResultFrame,
  subFrame,
  unsubFrame,
} from "./protocol.js";

/** The subset of the WebSocket API the client needs; both the browser
 * WebSocket and the `ws` package implement it. */
export interface WsLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type WsFactory = (url: string) => WsLike;

export type Status = "connecting" | "connected" | "reconnecting" | "closed";

export interface ClientOptions {
  wsFactory: WsFactory;
  /** Initial reconnect delay; doubles up to maxBackoffMs. */
  backoffMs?: number;
  maxBackoffMs?: number;
}

export class ConsoleClient {
  private ws: WsLike | null = null;
  private handlers = new Map<string, Set<(env: Envelope) => void>>();
  private pending = new Map<number, (res: ResultFrame) => void>();
  private statusHandlers = new Set<(s: Status) => void>();
  private nextId = 1;
  private backoff: number;
  private readonly baseBackoff: number;
  private readonly maxBackoff: number;
  private closed = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  status: Status = "connecting";

  constructor(
    private readonly url: string,
    private readonly options: ClientOptions,
  ) {
    this.baseBackoff = options.backoffMs ?? 250;
    this.maxBackoff = options.maxBackoffMs ?? 2000;
    this.backoff = this.baseBackoff;
    this.connect();
  }

  private setStatus(s: Status): void {
    this.status = s;
    for (const h of this.statusHandlers) h(s);
  }

  private connect(): void {
    const ws = this.options.wsFactory(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.backoff = this.baseBackoff;
      this.setStatus("connected");
      // restore subscriptions the server lost with the old connection
      for (const topic of this.handlers.keys()) ws.send(subFrame(topic));
    };
    ws.onmessage = (ev) => this.handleFrame(String(ev.data));
    ws.onerror = () => {
      /* onclose follows; reconnect happens there */
    };
    ws.onclose = () => {
      this.ws = null;
      for (const resolve of this.pending.values()) {
        resolve({ op: "result", id: null, ok: false, detail: "disconnected" });
      }
      this.pending.clear();
      if (this.closed) {
        this.setStatus("closed");
        return;
      }
      this.setStatus("reconnecting");
      this.reconnectTimer = setTimeout(() => this.connect(), this.backoff);
      this.backoff = Math.min(this.backoff * 2, this.maxBackoff);
    };
  }

  private handleFrame(raw: string): void {
    const frame = parseServerFrame(raw);
    if (frame === null) return;
    if (frame.op === "msg") {
      const hs = this.handlers.get(frame.topic);
      if (hs) {
        const env: Envelope = {
          topic: frame.topic,
          type: frame.type,
          stamp_ns: frame.stamp_ns,
          data: frame.data,
        };
        for (const h of hs) h(env);
      }
      return;
    }
    if (frame.op === "result" && frame.id !== null && frame.id !== undefined) {
      const resolve = this.pending.get(frame.id as number);
      if (resolve) {
        this.pending.delete(frame.id as number);
        resolve(frame);
      }
    }
  }

  onStatus(handler: (s: Status) => void): void {
    this.statusHandlers.add(handler);
  }

  subscribe(topic: string, handler: (env: Envelope) => void): void {
    let hs = this.handlers.get(topic);
    if (hs === undefined) {
      hs = new Set();
      this.handlers.set(topic, hs);
      if (this.status === "connected" && this.ws) this.ws.send(subFrame(topic));
    }
    hs.add(handler);
  }

  unsubscribe(topic: string): void {
    if (this.handlers.delete(topic) && this.status === "connected" && this.ws) {
      this.ws.send(unsubFrame(topic));
    }
  }

  publish(env: Envelope): void {
    if (this.status === "connected" && this.ws) this.ws.send(pubFrame(env));
  }

  call(service: string, request: Record<string, unknown> = {}): Promise<ResultFrame> {
    const id = this.nextId++;
    return new Promise((resolve) => {
      if (this.status !== "connected" || this.ws === null) {
        resolve({ op: "result", id, ok: false, detail: "disconnected" });
        return;
      }
      this.pending.set(id, resolve);
      this.ws.send(callFrame(service, request, id));
    });
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    if (this.ws) this.ws.close();
    else this.setStatus("closed");
  }

  /** Resolves once connected; rejects after the deadline. */
  ready(timeoutMs = 5000): Promise<void> {
    if (this.status === "connected") return Promise.resolve();
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error("connect timeout")), timeoutMs);
      this.onStatus((s) => {
        if (s === "connected") {
          clearTimeout(timer);
          resolve();
        }
      });
    });
  }
}
