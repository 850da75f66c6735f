/** Teleop gripper panel: gauges for aperture, grip force and feedback
 * frequency, fed by teleop_state app_events relayed through the gateway. */

import type { AppEventMsg } from "./types.js";

export interface TeleopView {
  apertureMm: number;
  gripForce: number;
  feedbackHz: number;
  slip: boolean;
  crushed: boolean;
  tMs: number;
}

export const EMPTY_TELEOP: TeleopView | null = null;

const APERTURE_FULL_MM = 80.0; // jaw fully open
const GRIP_FULL = 10.0; // gauge full-scale, matches frequency-map reference
const FREQ_MIN_HZ = 0.5;
const FREQ_MAX_HZ = 100.0;

export function applyTeleopEvent(view: TeleopView | null, msg: AppEventMsg): TeleopView | null {
  const ev = msg.event as Record<string, unknown>;
  if (ev["kind"] !== "teleop_state") return view;
  const n = (key: string): number => {
    const v = ev[key];
    return typeof v === "number" && Number.isFinite(v) ? v : 0;
  };
  return {
    apertureMm: n("aperture_mm"),
    gripForce: n("grip_force"),
    feedbackHz: n("feedback_hz"),
    slip: ev["slip"] === true,
    crushed: ev["crushed"] === true,
    tMs: n("t_ms"),
  };
}

export interface GaugeLevels {
  aperture: number;
  grip: number;
  frequency: number;
}

const clamp01 = (v: number) => Math.min(1, Math.max(0, v));

/** Normalize the three gauges to [0,1] needle positions. */
export function gaugeLevels(view: TeleopView): GaugeLevels {
  return {
    aperture: clamp01(view.apertureMm / APERTURE_FULL_MM),
    grip: clamp01(view.gripForce / GRIP_FULL),
    frequency:
      view.feedbackHz <= 0
        ? 0
        : clamp01((view.feedbackHz - FREQ_MIN_HZ) / (FREQ_MAX_HZ - FREQ_MIN_HZ)),
  };
}
