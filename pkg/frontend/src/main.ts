/** Browser entry point: one gateway socket feeding every panel, one virtual
 * fingertip feeding the gateway. All panel state comes off the wire — the
 * page never simulates the device. */

import { FrameAssembler } from "./assemble.js";
import type { AssembledFrame } from "./assemble.js";
import { deficitCentroid, frameToRgba } from "./heatmap.js";
import { TouchpadDriver } from "./touchpad.js";
import type { SensorGeometry } from "./touchpad.js";
import { GatewayClient, fetchSchema } from "./socket.js";
import { ScopeModel, waveformPoints } from "./scope.js";
import type { MeasuredPoint } from "./scope.js";
import { applyPercept, EMPTY_BADGE, hazardTier } from "./percept.js";
import type { BadgeState } from "./percept.js";
import { applyGameEvent, EMPTY_GAME, sprites } from "./game.js";
import type { GameModel } from "./game.js";
import { applyTeleopEvent, gaugeLevels } from "./teleop.js";
import type { TeleopView } from "./teleop.js";
import { applyExperimentEvent, boxLayout } from "./experiment.js";
import type { ExperimentModel } from "./experiment.js";
import { Freshness } from "./viewstate.js";
import type { Panel } from "./viewstate.js";
import type { Channel, TelemetryMsg } from "./types.js";

// device default; /schema describes messages, not sensor geometry, so the
// pad assumes this cap and picks up width/height from the first frame
const DEPTH_CAP_MM = 3.0;
const SCOPE_WINDOW_MS = 100;
const TRAIL_LEN = 48;

type App = "free" | "game" | "teleop" | "experiment";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
}

function ctx2d(canvas: HTMLCanvasElement): CanvasRenderingContext2D {
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d unavailable");
  return ctx;
}

export function main(): void {
  const params = new URLSearchParams(location.search);
  const addr = params.get("gateway") ?? "127.0.0.1:8077";

  const statusEl = byId<HTMLSpanElement>("status");
  const bannerEl = byId<HTMLDivElement>("banner");
  const pad = byId<HTMLCanvasElement>("pad");
  const scopeCanvas = byId<HTMLCanvasElement>("scope");
  const scopeLabel = byId<HTMLDivElement>("scope-label");
  const telemetryEl = byId<HTMLDivElement>("telemetry");
  const perceptEl = byId<HTMLDivElement>("percept");
  const gameCanvas = byId<HTMLCanvasElement>("game");
  const gameLabel = byId<HTMLDivElement>("game-label");
  const teleopEl = byId<HTMLDivElement>("teleop");
  const expCanvas = byId<HTMLCanvasElement>("experiment");

  // -- state fed exclusively by gateway messages -----------------------------
  const fresh = new Freshness();
  const assembler = new FrameAssembler();
  const scope = new ScopeModel();
  let lastFrame: AssembledFrame | null = null;
  let badge: BadgeState = EMPTY_BADGE;
  let game: GameModel = EMPTY_GAME;
  let teleop: TeleopView | null = null;
  let experiment: ExperimentModel = new Map();
  const trail: { x: number; y: number }[] = [];

  const geom: SensorGeometry = { width: 64, height: 64, depthCapMm: DEPTH_CAP_MM };

  // -- gateway ----------------------------------------------------------------
  const client = new GatewayClient(`ws://${addr}/ws`);
  let bannerTimer: number | undefined;
  const banner = (text: string) => {
    bannerEl.textContent = text;
    bannerEl.classList.add("show");
    clearTimeout(bannerTimer);
    bannerTimer = setTimeout(() => bannerEl.classList.remove("show"), 4000) as unknown as number;
  };
  client.onBanner(banner);
  client.onStatus((connected) => {
    statusEl.textContent = connected ? `connected to ${addr}` : "disconnected";
    statusEl.classList.toggle("ok", connected);
  });

  fetchSchema(`http://${addr}`)
    .then((schema) => client.applySchema(schema))
    .catch(() => banner("schema fetch failed; sending unvalidated"));

  client.onMessage((msg) => {
    const now = performance.now();
    switch (msg.type) {
      case "frame_chunk": {
        let frame: AssembledFrame | null = null;
        try {
          frame = assembler.feed(msg);
        } catch (err) {
          banner(String(err));
        }
        if (frame) {
          lastFrame = frame;
          geom.width = frame.width;
          geom.height = frame.height;
          const c = deficitCentroid(frame);
          if (c) {
            trail.push(c);
            if (trail.length > TRAIL_LEN) trail.shift();
          }
          drawPad();
          fresh.markFresh("frame", now);
        }
        break;
      }
      case "telemetry":
        scope.applyTelemetry(msg);
        drawTelemetry(msg);
        drawScope();
        fresh.markFresh("telemetry", now);
        fresh.markFresh("scope", now);
        break;
      case "stim_command":
        scope.applyCommand(msg);
        drawScope();
        fresh.markFresh("scope", now);
        break;
      case "percept_event":
        badge = applyPercept(badge, msg);
        drawPercept();
        fresh.markFresh("percept", now);
        break;
      case "app_event": {
        const g = applyGameEvent(game, msg);
        if (g !== game) {
          game = g;
          drawGame();
          fresh.markFresh("game", now);
        }
        const t = applyTeleopEvent(teleop, msg);
        if (t !== teleop) {
          teleop = t;
          drawTeleop();
          fresh.markFresh("teleop", now);
        }
        const e = applyExperimentEvent(experiment, msg);
        if (e !== experiment) {
          experiment = e;
          drawExperiment();
          fresh.markFresh("experiment", now);
        }
        break;
      }
      case "error":
        banner(`device error ${msg.code}: ${msg.detail}`);
        break;
      case "ack":
        break; // command landed; scope already shows it via the echo
    }
  });
  client.connect();

  // -- virtual fingertip -------------------------------------------------------
  const driver = new TouchpadDriver(geom, (event) => client.sendAppEvent(event));
  const uv = (ev: PointerEvent): [number, number] => {
    const rect = pad.getBoundingClientRect();
    return [(ev.clientX - rect.left) / rect.width, (ev.clientY - rect.top) / rect.height];
  };
  pad.addEventListener("pointerdown", (ev) => {
    pad.setPointerCapture(ev.pointerId);
    const [u, v] = uv(ev);
    driver.down(u, v, ev.pressure, performance.now());
  });
  pad.addEventListener("pointermove", (ev) => {
    if (!driver.isActive) return;
    const [u, v] = uv(ev);
    driver.move(u, v, ev.pressure, performance.now());
  });
  pad.addEventListener("pointerup", () => driver.up());
  pad.addEventListener("pointercancel", () => driver.up());
  pad.addEventListener(
    "wheel",
    (ev) => {
      ev.preventDefault();
      driver.wheel(ev.deltaY);
    },
    { passive: false },
  );
  setInterval(() => driver.tick(performance.now()), driver.intervalMs);

  // -- painters ----------------------------------------------------------------
  const padCtx = ctx2d(pad);
  padCtx.imageSmoothingEnabled = false;
  const backing = document.createElement("canvas");

  function drawPad(): void {
    if (!lastFrame) return;
    backing.width = lastFrame.width;
    backing.height = lastFrame.height;
    const bctx = ctx2d(backing);
    bctx.putImageData(
      new ImageData(frameToRgba(lastFrame), lastFrame.width, lastFrame.height),
      0,
      0,
    );
    padCtx.imageSmoothingEnabled = false;
    padCtx.drawImage(backing, 0, 0, pad.width, pad.height);
    const sx = pad.width / lastFrame.width;
    const sy = pad.height / lastFrame.height;
    trail.forEach((p, i) => {
      padCtx.fillStyle = `rgba(255,255,255,${(0.15 + (0.6 * i) / trail.length).toFixed(2)})`;
      padCtx.beginPath();
      padCtx.arc(p.x * sx, p.y * sy, 2.5, 0, Math.PI * 2);
      padCtx.fill();
    });
  }

  const scopeCtx = ctx2d(scopeCanvas);
  const channelColor: Record<Channel, string> = { ac1: "#6fd0ff", ac2: "#ffc36f" };

  function drawScope(): void {
    const w = scopeCanvas.width;
    const h = scopeCanvas.height;
    scopeCtx.fillStyle = "#10141a";
    scopeCtx.fillRect(0, 0, w, h);
    const half = h / 2;
    scopeCtx.strokeStyle = "#2a3240";
    scopeCtx.beginPath();
    scopeCtx.moveTo(0, half);
    scopeCtx.lineTo(w, half);
    scopeCtx.stroke();
    // commanded drive, top half (+/-5 mA full scale)
    const labels: string[] = [];
    for (const ch of ["ac1", "ac2"] as Channel[]) {
      const cmd = scope.command(ch);
      if (!cmd) {
        labels.push(`${ch} —`);
        continue;
      }
      labels.push(`${ch} ${cmd.frequency_hz} Hz ${cmd.amplitude_ma} mA ${hazardTier(cmd)}`);
      const pts = waveformPoints(cmd, SCOPE_WINDOW_MS, w);
      scopeCtx.strokeStyle = channelColor[ch];
      scopeCtx.beginPath();
      for (let x = 0; x < w; x++) {
        const y = half / 2 - (pts[x] / 5.0) * (half / 2 - 4);
        if (x === 0) scopeCtx.moveTo(x, y);
        else scopeCtx.lineTo(x, y);
      }
      scopeCtx.stroke();
    }
    // measured trail, bottom half
    const trailPts: MeasuredPoint[] = scope.measured;
    if (trailPts.length > 1) {
      for (const [idx, key] of (["ac1", "ac2"] as const).entries()) {
        scopeCtx.strokeStyle = channelColor[key];
        scopeCtx.beginPath();
        trailPts.forEach((p, i) => {
          const x = (i / (trailPts.length - 1)) * w;
          const v = idx === 0 ? p.ac1 : p.ac2;
          const y = h - 4 - (Math.min(Math.abs(v), 5) / 5) * (half - 8);
          if (i === 0) scopeCtx.moveTo(x, y);
          else scopeCtx.lineTo(x, y);
        });
        scopeCtx.stroke();
      }
    }
    scopeLabel.textContent = labels.join("   ·   ");
  }

  function drawTelemetry(t: TelemetryMsg): void {
    telemetryEl.textContent =
      `t=${(t.t_us / 1e6).toFixed(2)} s   ` +
      `ac1=${t.measured_ma[0].toFixed(2)} mA   ac2=${t.measured_ma[1].toFixed(2)} mA   ` +
      `power=${t.power_draw_ma.toFixed(0)} mA   load=${t.load_kohm.toFixed(1)} kΩ   ` +
      `switches=0x${t.switch_bits.toString(16)}`;
  }

  function drawPercept(): void {
    if (!badge.location) {
      perceptEl.innerHTML = `<span class="muted">no percepts yet</span>`;
      return;
    }
    const meter = Math.min(1, badge.intensity / 2);
    perceptEl.innerHTML =
      `<span class="loc">${badge.location}</span> on <b>${badge.zone}</b>` +
      `<span class="meter"><span style="width:${(meter * 100).toFixed(0)}%"></span></span>` +
      `<span class="muted">${badge.intensity.toFixed(2)}</span>`;
  }

  const gameCtx = ctx2d(gameCanvas);
  const spriteColor = { ice: "#8fd7ff", fire: "#ff8a5f", cargo: "#ffd86f", craft: "#f4f7fa" };

  function drawGame(): void {
    const w = gameCanvas.width;
    const h = gameCanvas.height;
    gameCtx.fillStyle = "#10141a";
    gameCtx.fillRect(0, 0, w, h);
    for (const s of sprites(game)) {
      gameCtx.fillStyle = spriteColor[s.kind];
      gameCtx.fillRect(s.x * w, s.y * h, Math.max(2, s.w * w - 1), Math.max(2, s.h * h - 1));
    }
    const c = game.craft;
    gameLabel.textContent = c
      ? `cargo ${c.cargoCollected}   over ${c.zoneUnder ?? "clear ground"}` +
        `${c.collided ? "   WALL" : ""}${c.inContact ? "" : "   (no touch)"}`
      : "waiting for a flight session";
  }

  function drawTeleop(): void {
    if (!teleop) {
      teleopEl.innerHTML = `<span class="muted">waiting for a teleop session</span>`;
      return;
    }
    const lv = gaugeLevels(teleop);
    const bar = (label: string, frac: number, text: string) =>
      `<div class="gauge"><label>${label}</label>` +
      `<span class="meter"><span style="width:${(frac * 100).toFixed(1)}%"></span></span>` +
      `<span>${text}</span></div>`;
    teleopEl.innerHTML =
      bar("aperture", lv.aperture, `${teleop.apertureMm.toFixed(1)} mm`) +
      bar("grip", lv.grip, teleop.gripForce.toFixed(2)) +
      bar("feedback", lv.frequency, `${teleop.feedbackHz.toFixed(1)} Hz`) +
      (teleop.crushed ? `<span class="bad">CRUSHED</span>` : "") +
      (teleop.slip ? `<span class="bad">slip</span>` : "");
  }

  const expCtx = ctx2d(expCanvas);

  function drawExperiment(): void {
    const w = expCanvas.width;
    const h = expCanvas.height;
    expCtx.fillStyle = "#10141a";
    expCtx.fillRect(0, 0, w, h);
    const padY = 18;
    const toY = (frac: number) => h - padY - frac * (h - 2 * padY);
    const boxW = Math.min(26, w / (boxLayout(experiment).length + 2));
    for (const b of boxLayout(experiment)) {
      const x = b.cx * w;
      expCtx.strokeStyle = b.condition === "baseline" ? "#5a6472" : "#6fd0ff";
      expCtx.fillStyle = b.condition === "baseline" ? "#3a4250" : "#1e4a63";
      expCtx.beginPath();
      expCtx.moveTo(x, toY(b.whiskerLo));
      expCtx.lineTo(x, toY(b.whiskerHi));
      expCtx.stroke();
      expCtx.fillRect(x - boxW / 2, toY(b.boxHi), boxW, toY(b.boxLo) - toY(b.boxHi));
      expCtx.strokeRect(x - boxW / 2, toY(b.boxHi), boxW, toY(b.boxLo) - toY(b.boxHi));
      expCtx.beginPath();
      expCtx.moveTo(x - boxW / 2, toY(b.median));
      expCtx.lineTo(x + boxW / 2, toY(b.median));
      expCtx.stroke();
      if (b.condition !== "baseline") {
        expCtx.fillStyle = "#aab4c0";
        expCtx.fillText(b.zone, x - boxW / 2, h - 4);
      }
    }
  }

  // -- app tabs + staleness ------------------------------------------------------
  const panels: [Panel, HTMLElement][] = [
    ["frame", byId("panel-frame")],
    ["scope", byId("panel-scope")],
    ["telemetry", byId("panel-telemetry")],
    ["percept", byId("panel-percept")],
    ["game", byId("panel-game")],
    ["teleop", byId("panel-teleop")],
    ["experiment", byId("panel-experiment")],
  ];
  setInterval(() => {
    const now = performance.now();
    for (const [name, el] of panels) {
      el.classList.toggle("stale", fresh.isStale(name, now));
    }
  }, 250);

  const appPanels: Record<App, string[]> = {
    free: [],
    game: ["panel-game"],
    teleop: ["panel-teleop"],
    experiment: ["panel-experiment"],
  };
  const allApps = new Set([...appPanels.game, ...appPanels.teleop, ...appPanels.experiment]);
  const setApp = (app: App) => {
    for (const id of allApps) {
      byId(id).classList.toggle("hidden", !appPanels[app].includes(id));
    }
    for (const a of Object.keys(appPanels) as App[]) {
      byId(`tab-${a}`).classList.toggle("on", a === app);
    }
  };
  for (const a of Object.keys(appPanels) as App[]) {
    byId(`tab-${a}`).addEventListener("click", () => setApp(a));
  }
  setApp("free");

  drawScope();
  drawPercept();
  drawGame();
  drawTeleop();
  drawExperiment();
}

// tests import the panel modules directly; only a real page runs the wiring
if (typeof document !== "undefined" && document.getElementById("pad")) {
  main();
}
