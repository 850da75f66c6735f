/** Virtual fingertip: resamples pointer state into press events at a fixed
 * rate (>= 30 Hz while active), with native pointer pressure when the
 * hardware reports it and a dwell + wheel fallback when it does not. */

export interface SensorGeometry {
  width: number;   // px
  height: number;  // px
  depthCapMm: number;
}

export interface PressJson {
  kind: "press";
  x: number;
  y: number;
  radius_px: number;
  peak_depth_mm: number;
  [extra: string]: unknown;
}

export interface ReleaseJson {
  kind: "release";
  [extra: string]: unknown;
}

const clamp01 = (v: number) => Math.min(1, Math.max(0, v));

/** Map normalized pad coordinates + pressure proxy to a device press. */
export function touchToPress(
  u: number,
  v: number,
  pressure: number,
  geom: SensorGeometry,
  radiusPx = 6,
): PressJson {
  return {
    kind: "press",
    x: clamp01(u) * (geom.width - 1),
    y: clamp01(v) * (geom.height - 1),
    radius_px: radiusPx,
    peak_depth_mm: clamp01(pressure) * geom.depthCapMm,
  };
}

export interface TouchpadOpts {
  hz?: number;          // resample rate while active; contract floor is 30
  dwellFullMs?: number; // dwell fallback: time from touch to full pressure
  radiusPx?: number;
}

export class TouchpadDriver {
  readonly hz: number;
  private dwellFullMs: number;
  private radiusPx: number;
  private active = false;
  private u = 0;
  private v = 0;
  private hwPressure = 0;
  private wheelBoost = 0;
  private activeSince = 0;

  constructor(
    private geom: SensorGeometry,
    private emit: (event: PressJson | ReleaseJson) => void,
    opts: TouchpadOpts = {},
  ) {
    this.hz = Math.max(30, opts.hz ?? 45);
    this.dwellFullMs = opts.dwellFullMs ?? 1500;
    this.radiusPx = opts.radiusPx ?? 6;
  }

  get intervalMs(): number {
    return 1000 / this.hz;
  }

  get isActive(): boolean {
    return this.active;
  }

  down(u: number, v: number, pressure: number, now: number): void {
    this.active = true;
    this.activeSince = now;
    this.wheelBoost = 0;
    this.move(u, v, pressure, now);
    this.tick(now); // first press goes out immediately, not a frame later
  }

  move(u: number, v: number, pressure: number, now: number): void {
    this.u = u;
    this.v = v;
    this.hwPressure = clamp01(pressure);
    void now;
  }

  up(): void {
    if (!this.active) return;
    this.active = false;
    this.emit({ kind: "release" });
  }

  /** Wheel adjusts the pressure proxy where hardware gives none. */
  wheel(deltaY: number): void {
    this.wheelBoost = Math.min(1, Math.max(-1, this.wheelBoost - deltaY / 1000));
  }

  pressureAt(now: number): number {
    const base = this.hwPressure > 0
      ? this.hwPressure
      : Math.min(1, (now - this.activeSince) / this.dwellFullMs) * 0.7 + 0.15;
    return clamp01(base + this.wheelBoost);
  }

  /** Resample tick: emits the current press while the pointer is down. */
  tick(now: number): void {
    if (!this.active) return;
    this.emit(touchToPress(this.u, this.v, this.pressureAt(now), this.geom, this.radiusPx));
  }
}
