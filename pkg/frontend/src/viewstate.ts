/** Per-panel freshness tracking: panels grey out when their feed goes stale. */

export const STALE_AFTER_MS = 1000;

export type Panel =
  | "frame"
  | "scope"
  | "telemetry"
  | "percept"
  | "game"
  | "teleop"
  | "experiment";

export class Freshness {
  private lastSeen = new Map<Panel, number>();

  markFresh(panel: Panel, nowMs: number): void {
    this.lastSeen.set(panel, nowMs);
  }

  ageMs(panel: Panel, nowMs: number): number {
    const seen = this.lastSeen.get(panel);
    return seen === undefined ? Number.POSITIVE_INFINITY : nowMs - seen;
  }

  /** Panels that never received data are empty, not stale. */
  isStale(panel: Panel, nowMs: number, staleAfterMs = STALE_AFTER_MS): boolean {
    const seen = this.lastSeen.get(panel);
    return seen !== undefined && nowMs - seen > staleAfterMs;
  }

  hasData(panel: Panel): boolean {
    return this.lastSeen.has(panel);
  }
}
