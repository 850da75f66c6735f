/** Zone-experiment dashboard: box plots of intensity scores per zone and
 * condition, computed as pure geometry from zone_stats app_events. */

import type { AppEventMsg } from "./types.js";

export interface ZoneStatsRow {
  zone: string;
  condition: string;
  n: number;
  min: number;
  q1: number;
  median: number;
  q3: number;
  max: number;
}

/** rows keyed by `${zone}/${condition}`; latest event for a key wins. */
export type ExperimentModel = Map<string, ZoneStatsRow>;

export function applyExperimentEvent(model: ExperimentModel, msg: AppEventMsg): ExperimentModel {
  const ev = msg.event as Record<string, unknown>;
  if (ev["kind"] !== "zone_stats") return model;
  const rows = ev["rows"];
  if (!Array.isArray(rows)) return model;
  const next = new Map(model);
  for (const raw of rows) {
    if (typeof raw !== "object" || raw === null) continue;
    const r = raw as Record<string, unknown>;
    const zone = String(r["zone"] ?? "");
    const condition = String(r["condition"] ?? "");
    if (!zone || !condition) continue;
    const n = (key: string): number => {
      const v = r[key];
      return typeof v === "number" && Number.isFinite(v) ? v : 0;
    };
    next.set(`${zone}/${condition}`, {
      zone,
      condition,
      n: n("n"),
      min: n("min"),
      q1: n("q1"),
      median: n("median"),
      q3: n("q3"),
      max: n("max"),
    });
  }
  return next;
}

export interface BoxGeometry {
  zone: string;
  condition: string;
  /** x of the box center in [0,1]. */
  cx: number;
  /** y positions in [0,1], 0 = zero score, 1 = the shared score ceiling. */
  whiskerLo: number;
  boxLo: number;
  median: number;
  boxHi: number;
  whiskerHi: number;
}

/** Lay the boxes out on a shared scale: zones in first-seen order along x,
 * stimulated/baseline side by side, all heights relative to the global max. */
export function boxLayout(model: ExperimentModel): BoxGeometry[] {
  const rows = [...model.values()];
  if (rows.length === 0) return [];
  const zones: string[] = [];
  for (const r of rows) if (!zones.includes(r.zone)) zones.push(r.zone);
  const ceiling = Math.max(1e-9, ...rows.map((r) => r.max));
  const slot = 1 / zones.length;
  return rows.map((r) => {
    const zi = zones.indexOf(r.zone);
    const side = r.condition === "baseline" ? 0.7 : 0.3;
    const y = (v: number) => v / ceiling;
    return {
      zone: r.zone,
      condition: r.condition,
      cx: (zi + side) * slot,
      whiskerLo: y(r.min),
      boxLo: y(r.q1),
      median: y(r.median),
      boxHi: y(r.q3),
      whiskerHi: y(r.max),
    };
  });
}
