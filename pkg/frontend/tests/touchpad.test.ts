import { describe, expect, it } from "vitest";
import { TouchpadDriver, touchToPress } from "../src/touchpad.js";
import type { PressJson, ReleaseJson, SensorGeometry } from "../src/touchpad.js";

const GEOM: SensorGeometry = { width: 64, height: 64, depthCapMm: 3.0 };

describe("touchToPress", () => {
  it("maps a full-pressure center touch to the frame center at depth cap", () => {
    const press = touchToPress(0.5, 0.5, 1.0, GEOM);
    expect(press.kind).toBe("press");
    expect(press.x).toBeCloseTo(31.5, 10);
    expect(press.y).toBeCloseTo(31.5, 10);
    expect(press.peak_depth_mm).toBeCloseTo(GEOM.depthCapMm, 10);
  });

  it("clamps coordinates and pressure into range", () => {
    const low = touchToPress(-0.4, -2, -1, GEOM);
    expect([low.x, low.y, low.peak_depth_mm]).toEqual([0, 0, 0]);
    const high = touchToPress(1.7, 1.01, 9.9, GEOM);
    expect(high.x).toBeCloseTo(63, 10);
    expect(high.y).toBeCloseTo(63, 10);
    expect(high.peak_depth_mm).toBeCloseTo(3.0, 10);
  });

  it("keeps presses inside the device bounds check (0 <= x < width)", () => {
    const press = touchToPress(1.0, 1.0, 0.5, GEOM);
    expect(press.x).toBeLessThan(GEOM.width);
    expect(press.y).toBeLessThan(GEOM.height);
  });
});

function collector() {
  const events: (PressJson | ReleaseJson)[] = [];
  return { events, emit: (e: PressJson | ReleaseJson) => events.push(e) };
}

describe("TouchpadDriver", () => {
  it("never resamples slower than 30 Hz", () => {
    const { emit } = collector();
    expect(new TouchpadDriver(GEOM, emit, { hz: 10 }).intervalMs).toBeLessThanOrEqual(1000 / 30);
    expect(new TouchpadDriver(GEOM, emit, { hz: 60 }).intervalMs).toBeCloseTo(1000 / 60, 6);
    expect(new TouchpadDriver(GEOM, emit).intervalMs).toBeLessThanOrEqual(1000 / 30);
  });

  it("emits the first press immediately on touch down", () => {
    const { events, emit } = collector();
    const driver = new TouchpadDriver(GEOM, emit);
    driver.down(0.25, 0.75, 0.5, 1000);
    expect(events).toHaveLength(1);
    const press = events[0] as PressJson;
    expect(press.kind).toBe("press");
    expect(press.x).toBeCloseTo(0.25 * 63, 6);
    expect(press.y).toBeCloseTo(0.75 * 63, 6);
  });

  it("resamples the latest pointer state on each tick", () => {
    const { events, emit } = collector();
    const driver = new TouchpadDriver(GEOM, emit);
    driver.down(0.1, 0.1, 0.8, 0);
    driver.move(0.6, 0.4, 0.9, 10);
    driver.tick(20);
    const press = events.at(-1) as PressJson;
    expect(press.x).toBeCloseTo(0.6 * 63, 6);
    expect(press.y).toBeCloseTo(0.4 * 63, 6);
    expect(press.peak_depth_mm).toBeCloseTo(0.9 * 3.0, 6);
  });

  it("is silent while inactive and emits exactly one release", () => {
    const { events, emit } = collector();
    const driver = new TouchpadDriver(GEOM, emit);
    driver.tick(0);
    expect(events).toHaveLength(0);
    driver.down(0.5, 0.5, 0.5, 0);
    driver.up();
    driver.up(); // double release must not double-send
    driver.tick(50);
    const kinds = events.map((e) => e.kind);
    expect(kinds).toEqual(["press", "release"]);
  });

  it("ramps dwell pressure when hardware reports none", () => {
    const { events, emit } = collector();
    const driver = new TouchpadDriver(GEOM, emit, { dwellFullMs: 1000 });
    driver.down(0.5, 0.5, 0, 0);
    const first = events[0] as PressJson;
    driver.tick(1000);
    const later = events.at(-1) as PressJson;
    expect(first.peak_depth_mm).toBeGreaterThan(0); // light initial touch
    expect(later.peak_depth_mm).toBeGreaterThan(first.peak_depth_mm);
    expect(later.peak_depth_mm).toBeLessThanOrEqual(GEOM.depthCapMm);
  });

  it("lets the wheel deepen or lighten the dwell fallback", () => {
    const { events, emit } = collector();
    const driver = new TouchpadDriver(GEOM, emit, { dwellFullMs: 1000 });
    driver.down(0.5, 0.5, 0, 0);
    driver.wheel(-400); // scroll up = press harder
    driver.tick(100);
    const deeper = events.at(-1) as PressJson;
    driver.wheel(1600); // hard scroll down = back off
    driver.tick(101);
    const lighter = events.at(-1) as PressJson;
    expect(deeper.peak_depth_mm).toBeGreaterThan(lighter.peak_depth_mm);
  });

  it("prefers real pointer pressure over the dwell ramp", () => {
    const { events, emit } = collector();
    const driver = new TouchpadDriver(GEOM, emit, { dwellFullMs: 100 });
    driver.down(0.5, 0.5, 0.4, 0);
    driver.tick(10_000); // dwell would be saturated by now
    const press = events.at(-1) as PressJson;
    expect(press.peak_depth_mm).toBeCloseTo(0.4 * 3.0, 6);
  });
});
