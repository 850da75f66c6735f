/** JSON message shapes, mirroring the gateway's /schema document. */

export type Channel = "ac1" | "ac2";
export type PolarityName = "positive" | "negative" | "alternating";
export type PerceptLocation = "upper_fingertip" | "lower_fingertip" | "contact_point";
export type ZoneName = "fingertip" | "bottom" | "left" | "right" | "ventral";

export interface StimCommandMsg {
  type: "stim_command";
  seq: number;
  channel: Channel;
  polarity: PolarityName;
  amplitude_ma: number;
  frequency_hz: number;
  pulse_width_us: number;
  duration_ms: number;
  electrodes: number[];
}

export interface TelemetryMsg {
  type: "telemetry";
  seq: number;
  t_us: number;
  measured_ma: [number, number];
  power_draw_ma: number;
  switch_bits: number;
  load_kohm: number;
}

export interface PerceptEventMsg {
  type: "percept_event";
  seq: number;
  t_us: number;
  location: PerceptLocation;
  zone: ZoneName;
  intensity_score: number;
}

export interface FrameChunkMsg {
  type: "frame_chunk";
  seq: number;
  frame_seq: number;
  chunk_index: number;
  chunk_count: number;
  width: number;
  height: number;
  offset: number;
  data_b64: string;
}

export interface AckMsg {
  type: "ack";
  seq: number;
  acked_seq: number | null;
}

export interface ErrorMsg {
  type: "error";
  seq: number;
  code: number;
  detail: string;
}

export interface AppEventMsg {
  type: "app_event";
  seq: number;
  event: Record<string, unknown> & { kind: string };
}

export type GatewayMsg =
  | StimCommandMsg
  | TelemetryMsg
  | PerceptEventMsg
  | FrameChunkMsg
  | AckMsg
  | ErrorMsg
  | AppEventMsg;

/** Messages the gateway accepts from clients (gated again per /schema). */
export type OutboundMsg = StimCommandMsg | AppEventMsg;

const MSG_TYPES = new Set([
  "stim_command", "telemetry", "percept_event", "frame_chunk",
  "ack", "error", "app_event",
]);

export function isGatewayMsg(raw: unknown): raw is GatewayMsg {
  if (typeof raw !== "object" || raw === null) return false;
  const obj = raw as { type?: unknown; seq?: unknown };
  return typeof obj.type === "string" && MSG_TYPES.has(obj.type)
    && typeof obj.seq === "number";
}

/** The /schema document, as far as the client cares. */
export interface SchemaDoc {
  websocket: string;
  inbound_types: string[];
  framing: Record<string, unknown>;
  messages: Record<string, { direction: string; fields: Record<string, string> }>;
}
