/** Gateway connection: one socket, JSON both ways, input buffering across
 * short disconnects (<= 1 s, then dropped with a banner warning). */

import { isGatewayMsg } from "./types.js";
import type { GatewayMsg, OutboundMsg, SchemaDoc, StimCommandMsg, AppEventMsg } from "./types.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((data: string) => void) | null;
  onclose: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

function browserSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  const like: SocketLike = {
    send: (d) => ws.send(d),
    close: () => ws.close(),
    onopen: null,
    onmessage: null,
    onclose: null,
  };
  ws.onopen = () => like.onopen?.();
  ws.onmessage = (ev) => like.onmessage?.(String(ev.data));
  ws.onclose = () => like.onclose?.();
  ws.onerror = () => { /* close follows; reconnect handles it */ };
  return like;
}

export interface GatewayClientOpts {
  factory?: SocketFactory;
  now?: () => number;
  bufferMs?: number;     // how long inputs survive a disconnect
  reconnectMs?: number;  // 0 disables auto-reconnect
  schedule?: (fn: () => void, ms: number) => void;
}

export class GatewayClient {
  private factory: SocketFactory;
  private now: () => number;
  private bufferMs: number;
  private reconnectMs: number;
  private schedule: (fn: () => void, ms: number) => void;
  private sock: SocketLike | null = null;
  private open = false;
  private closed = false;
  private seq = 1;
  private buffer: { msg: OutboundMsg; at: number }[] = [];
  private onMsg: ((msg: GatewayMsg) => void)[] = [];
  private onStatusCb: ((connected: boolean) => void)[] = [];
  private onBannerCb: ((text: string) => void)[] = [];
  private inboundTypes: Set<string> | null = null;

  constructor(private url: string, opts: GatewayClientOpts = {}) {
    this.factory = opts.factory ?? browserSocket;
    this.now = opts.now ?? (() => Date.now());
    this.bufferMs = opts.bufferMs ?? 1000;
    this.reconnectMs = opts.reconnectMs ?? 750;
    this.schedule = opts.schedule ?? ((fn, ms) => { setTimeout(fn, ms); });
  }

  get connected(): boolean {
    return this.open;
  }

  onMessage(cb: (msg: GatewayMsg) => void): void {
    this.onMsg.push(cb);
  }

  onStatus(cb: (connected: boolean) => void): void {
    this.onStatusCb.push(cb);
  }

  onBanner(cb: (text: string) => void): void {
    this.onBannerCb.push(cb);
  }

  /** Restrict what send() accepts to the types the gateway declares. */
  applySchema(schema: SchemaDoc): void {
    this.inboundTypes = new Set(schema.inbound_types);
  }

  connect(): void {
    this.closed = false;
    const sock = this.factory(this.url);
    this.sock = sock;
    sock.onopen = () => {
      this.open = true;
      this.flush();
      this.onStatusCb.forEach((cb) => cb(true));
    };
    sock.onmessage = (data) => {
      let raw: unknown;
      try {
        raw = JSON.parse(data);
      } catch {
        return; // not ours to crash on
      }
      if (isGatewayMsg(raw)) this.onMsg.forEach((cb) => cb(raw));
    };
    sock.onclose = () => {
      const was = this.open;
      this.open = false;
      this.sock = null;
      if (was) this.onStatusCb.forEach((cb) => cb(false));
      if (!this.closed && this.reconnectMs > 0) {
        this.schedule(() => this.connect(), this.reconnectMs);
      }
    };
  }

  close(): void {
    this.closed = true;
    this.sock?.close();
  }

  /** Send now, or hold up to bufferMs while disconnected, then drop loudly. */
  send(msg: OutboundMsg): void {
    if (this.inboundTypes && !this.inboundTypes.has(msg.type)) {
      throw new Error(`gateway does not accept ${msg.type}`);
    }
    if (this.open && this.sock) {
      this.sock.send(JSON.stringify(msg));
      return;
    }
    this.buffer.push({ msg, at: this.now() });
    this.prune();
  }

  sendAppEvent(event: AppEventMsg["event"]): void {
    this.send({ type: "app_event", seq: this.nextSeq(), event });
  }

  sendStim(params: Omit<StimCommandMsg, "type" | "seq">): void {
    this.send({ type: "stim_command", seq: this.nextSeq(), ...params });
  }

  nextSeq(): number {
    return this.seq++;
  }

  private prune(): void {
    const cutoff = this.now() - this.bufferMs;
    const kept = this.buffer.filter((e) => e.at >= cutoff);
    const dropped = this.buffer.length - kept.length;
    this.buffer = kept;
    if (dropped > 0) {
      this.onBannerCb.forEach((cb) =>
        cb(`${dropped} input${dropped === 1 ? "" : "s"} dropped while disconnected`),
      );
    }
  }

  private flush(): void {
    this.prune();
    const held = this.buffer;
    this.buffer = [];
    for (const e of held) this.sock?.send(JSON.stringify(e.msg));
  }
}

/** Fetch and lightly validate the /schema document. */
export async function fetchSchema(
  baseUrl: string,
  fetchImpl: typeof fetch = fetch,
): Promise<SchemaDoc> {
  const res = await fetchImpl(`${baseUrl.replace(/\/$/, "")}/schema`);
  if (!res.ok) throw new Error(`schema fetch failed: ${res.status}`);
  const doc = (await res.json()) as SchemaDoc;
  if (!doc.websocket || !Array.isArray(doc.inbound_types) || !doc.messages) {
    throw new Error("schema document is missing required sections");
  }
  return doc;
}
