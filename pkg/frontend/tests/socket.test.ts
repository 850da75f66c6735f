import { describe, expect, it } from "vitest";
import { GatewayClient, fetchSchema } from "../src/socket.js";
import type { SocketLike } from "../src/socket.js";
import type { GatewayMsg, SchemaDoc } from "../src/types.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  onopen: (() => void) | null = null;
  onmessage: ((data: string) => void) | null = null;
  onclose: (() => void) | null = null;
  constructor(public url: string) {}
  send(data: string): void {
    this.sent.push(data);
  }
  close(): void {
    this.onclose?.();
  }
}

function harness(opts: { bufferMs?: number; reconnectMs?: number } = {}) {
  const sockets: FakeSocket[] = [];
  let now = 0;
  const scheduled: { fn: () => void; ms: number }[] = [];
  const client = new GatewayClient("ws://test/ws", {
    factory: (url) => {
      const s = new FakeSocket(url);
      sockets.push(s);
      return s;
    },
    now: () => now,
    schedule: (fn, ms) => scheduled.push({ fn, ms }),
    ...opts,
  });
  return {
    client,
    sockets,
    scheduled,
    setNow: (t: number) => {
      now = t;
    },
  };
}

const SCHEMA: SchemaDoc = {
  websocket: "/ws",
  inbound_types: ["stim_command", "app_event"],
  framing: {},
  messages: { ack: { direction: "device->host", fields: {} } },
};

describe("GatewayClient buffering", () => {
  it("holds inputs while disconnected and flushes them in order on open", () => {
    const h = harness();
    h.client.connect();
    h.client.sendAppEvent({ kind: "press", x: 1, y: 2, peak_depth_mm: 0.5 });
    h.client.sendAppEvent({ kind: "release" });
    expect(h.sockets[0].sent).toHaveLength(0);
    h.sockets[0].onopen!();
    const kinds = h.sockets[0].sent.map((s) => JSON.parse(s).event.kind);
    expect(kinds).toEqual(["press", "release"]);
    const seqs = h.sockets[0].sent.map((s) => JSON.parse(s).seq);
    expect(seqs[1]).toBeGreaterThan(seqs[0]);
  });

  it("drops inputs older than the buffer window and warns once per batch", () => {
    const h = harness({ bufferMs: 1000 });
    const banners: string[] = [];
    h.client.onBanner((t) => banners.push(t));
    h.client.connect();
    h.client.sendAppEvent({ kind: "press", x: 0, y: 0, peak_depth_mm: 1 });
    h.setNow(1500); // stale now
    h.client.sendAppEvent({ kind: "press", x: 5, y: 5, peak_depth_mm: 1 });
    expect(banners).toEqual(["1 input dropped while disconnected"]);
    h.sockets[0].onopen!();
    expect(h.sockets[0].sent).toHaveLength(1);
    expect(JSON.parse(h.sockets[0].sent[0]).event.x).toBe(5);
  });

  it("sends straight through while connected", () => {
    const h = harness();
    h.client.connect();
    h.sockets[0].onopen!();
    h.client.sendAppEvent({ kind: "release" });
    expect(h.sockets[0].sent).toHaveLength(1);
  });
});

describe("GatewayClient schema gating", () => {
  it("rejects types the gateway does not accept", () => {
    const h = harness();
    h.client.applySchema({ ...SCHEMA, inbound_types: ["app_event"] });
    h.client.connect();
    h.sockets[0].onopen!();
    expect(() =>
      h.client.sendStim({
        channel: "ac1",
        polarity: "alternating",
        amplitude_ma: 1,
        frequency_hz: 50,
        pulse_width_us: 200,
        duration_ms: 100,
        electrodes: [0],
      }),
    ).toThrow(/stim_command/);
    expect(() => h.client.sendAppEvent({ kind: "release" })).not.toThrow();
  });
});

describe("GatewayClient inbound dispatch", () => {
  it("parses gateway JSON and ignores junk without crashing", () => {
    const h = harness();
    const seen: GatewayMsg[] = [];
    h.client.onMessage((m) => seen.push(m));
    h.client.connect();
    h.sockets[0].onopen!();
    h.sockets[0].onmessage!("{ not json");
    h.sockets[0].onmessage!(JSON.stringify({ type: "no_such_type", seq: 1 }));
    h.sockets[0].onmessage!(JSON.stringify({ type: "ack", seq: 3, acked_seq: 2 }));
    expect(seen).toHaveLength(1);
    expect(seen[0].type).toBe("ack");
  });
});

describe("GatewayClient lifecycle", () => {
  it("reports status transitions and schedules reconnects", () => {
    const h = harness({ reconnectMs: 750 });
    const status: boolean[] = [];
    h.client.onStatus((s) => status.push(s));
    h.client.connect();
    h.sockets[0].onopen!();
    h.sockets[0].onclose!();
    expect(status).toEqual([true, false]);
    expect(h.scheduled).toHaveLength(1);
    expect(h.scheduled[0].ms).toBe(750);
    h.scheduled[0].fn();
    expect(h.sockets).toHaveLength(2);
  });

  it("stays down after an explicit close", () => {
    const h = harness({ reconnectMs: 750 });
    h.client.connect();
    h.sockets[0].onopen!();
    h.client.close();
    expect(h.scheduled).toHaveLength(0);
    expect(h.sockets).toHaveLength(1);
  });
});

describe("fetchSchema", () => {
  const ok = (doc: unknown) =>
    (async () => ({ ok: true, status: 200, json: async () => doc })) as unknown as typeof fetch;

  it("returns a well-formed schema document", async () => {
    const doc = await fetchSchema("http://127.0.0.1:8077", ok(SCHEMA));
    expect(doc.websocket).toBe("/ws");
    expect(doc.inbound_types).toContain("app_event");
  });

  it("rejects documents missing required sections", async () => {
    await expect(fetchSchema("http://x", ok({ websocket: "/ws" }))).rejects.toThrow(/sections/);
  });

  it("rejects http errors", async () => {
    const bad = (async () => ({ ok: false, status: 500 })) as unknown as typeof fetch;
    await expect(fetchSchema("http://x", bad)).rejects.toThrow(/500/);
  });
});
