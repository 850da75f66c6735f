/** Percept badge: turns percept events and stim commands into the labels the
 * operator panel shows. Pure reducers so tests can drive them directly. */

import type { PerceptEventMsg, PerceptLocation, StimCommandMsg } from "./types.js";

export function describeLocation(loc: PerceptLocation): string {
  switch (loc) {
    case "upper_fingertip":
      return "upper fingertip";
    case "lower_fingertip":
      return "lower fingertip";
    case "contact_point":
      return "contact point";
  }
}

export type HazardTier = "collision" | "fire" | "ice" | "contact";

/** Classify a stim command by the feedback tier that produces it.
 * Collision bursts run hottest, fire is strong+fast, ice is the slow cue. */
export function hazardTier(cmd: StimCommandMsg): HazardTier {
  if (cmd.amplitude_ma >= 3.5) return "collision";
  if (cmd.frequency_hz <= 25) return "ice";
  if (cmd.amplitude_ma >= 2.5) return "fire";
  return "contact";
}

export interface BadgeState {
  location: string | null;
  zone: string | null;
  intensity: number;
  tUs: number;
}

export const EMPTY_BADGE: BadgeState = { location: null, zone: null, intensity: 0, tUs: 0 };

export function applyPercept(state: BadgeState, ev: PerceptEventMsg): BadgeState {
  // events can interleave from both channels; latest wins
  if (ev.t_us < state.tUs) return state;
  return {
    location: describeLocation(ev.location),
    zone: ev.zone,
    intensity: ev.intensity_score,
    tUs: ev.t_us,
  };
}
