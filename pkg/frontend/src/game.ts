/** Flight game panel model: a pure reducer over app_event chatter relayed by
 * the gateway. The craft, hazards and cargo are whatever the session driver
 * last said they were — the panel never simulates kinematics itself. */

import type { AppEventMsg } from "./types.js";

export type Cell = readonly [number, number];

export interface WorldView {
  width: number;
  height: number;
  cell: number;
  ice: Cell[];
  fire: Cell[];
  cargo: Cell[];
}

export interface CraftView {
  x: number;
  y: number;
  vx: number;
  vy: number;
  zoneUnder: "ice" | "fire" | null;
  cargoCollected: number;
  collided: boolean;
  inContact: boolean;
  tMs: number;
}

export interface GameModel {
  world: WorldView | null;
  craft: CraftView | null;
}

export const EMPTY_GAME: GameModel = { world: null, craft: null };

function asCells(raw: unknown): Cell[] {
  if (!Array.isArray(raw)) return [];
  const out: Cell[] = [];
  for (const item of raw) {
    if (Array.isArray(item) && item.length === 2) {
      out.push([Number(item[0]), Number(item[1])]);
    }
  }
  return out;
}

function num(raw: Record<string, unknown>, key: string, fallback = 0): number {
  const v = raw[key];
  return typeof v === "number" && Number.isFinite(v) ? v : fallback;
}

/** Fold one app_event into the model; unrelated kinds leave it untouched. */
export function applyGameEvent(model: GameModel, msg: AppEventMsg): GameModel {
  const ev = msg.event as Record<string, unknown>;
  const kind = ev["kind"];
  if (kind === "flight_world") {
    return {
      ...model,
      world: {
        width: num(ev, "width"),
        height: num(ev, "height"),
        cell: num(ev, "cell", 1),
        ice: asCells(ev["ice"]),
        fire: asCells(ev["fire"]),
        cargo: asCells(ev["cargo"]),
      },
    };
  }
  if (kind === "flight_state") {
    const zone = ev["zone_under"];
    return {
      ...model,
      craft: {
        x: num(ev, "x"),
        y: num(ev, "y"),
        vx: num(ev, "vx"),
        vy: num(ev, "vy"),
        zoneUnder: zone === "ice" || zone === "fire" ? zone : null,
        cargoCollected: num(ev, "cargo_collected"),
        collided: ev["collided"] === true,
        inContact: ev["in_contact"] === true,
        tMs: num(ev, "t_ms"),
      },
    };
  }
  return model;
}

export interface Sprite {
  kind: "ice" | "fire" | "cargo" | "craft";
  /** Normalized [0,1]² rectangle for the painter. */
  x: number;
  y: number;
  w: number;
  h: number;
}

/** Flatten the model into normalized draw rects; craft drawn last (on top). */
export function sprites(model: GameModel): Sprite[] {
  const world = model.world;
  if (!world || world.width <= 0 || world.height <= 0) return [];
  const cw = world.cell / world.width;
  const ch = world.cell / world.height;
  const out: Sprite[] = [];
  const cellRect = (kind: Sprite["kind"], [i, j]: Cell): Sprite => ({
    kind,
    x: (i * world.cell) / world.width,
    y: (j * world.cell) / world.height,
    w: cw,
    h: ch,
  });
  for (const c of world.ice) out.push(cellRect("ice", c));
  for (const c of world.fire) out.push(cellRect("fire", c));
  for (const c of world.cargo) out.push(cellRect("cargo", c));
  if (model.craft) {
    out.push({
      kind: "craft",
      x: model.craft.x / world.width - cw / 4,
      y: model.craft.y / world.height - ch / 4,
      w: cw / 2,
      h: ch / 2,
    });
  }
  return out;
}
