import { describe, expect, it } from "vitest";
import { ScopeModel, driveAt, waveformPoints } from "../src/scope.js";
import type { StimCommandMsg, TelemetryMsg } from "../src/types.js";

function cmd(over: Partial<StimCommandMsg> = {}): StimCommandMsg {
  return {
    type: "stim_command",
    seq: 1,
    channel: "ac1",
    polarity: "alternating",
    amplitude_ma: 2.0,
    frequency_hz: 50.0,
    pulse_width_us: 200.0,
    duration_ms: 400.0,
    electrodes: [5, 6],
    ...over,
  };
}

describe("driveAt", () => {
  it("reconstructs the alternating biphasic shape", () => {
    const c = cmd(); // 50 Hz -> 20 000 us period
    expect(driveAt(c, 0)).toBe(2.0);
    expect(driveAt(c, 199)).toBe(2.0);
    expect(driveAt(c, 200)).toBe(0);
    expect(driveAt(c, 9999)).toBe(0);
    expect(driveAt(c, 10_000)).toBe(-2.0);
    expect(driveAt(c, 10_199)).toBe(-2.0);
    expect(driveAt(c, 10_200)).toBe(0);
    expect(driveAt(c, 20_000)).toBe(2.0); // next period
  });

  it("keeps single-polarity pulses on their own side of zero", () => {
    const pos = cmd({ polarity: "positive" });
    const neg = cmd({ polarity: "negative" });
    for (let t = 0; t < 40_000; t += 37) {
      expect(driveAt(pos, t)).toBeGreaterThanOrEqual(0);
      expect(driveAt(neg, t)).toBeLessThanOrEqual(0);
    }
    expect(driveAt(pos, 100)).toBe(2.0);
    expect(driveAt(neg, 100)).toBe(-2.0);
    expect(driveAt(pos, 10_050)).toBe(0); // no second phase
  });

  it("is silent outside the train and for zero amplitude", () => {
    const c = cmd({ duration_ms: 100 });
    expect(driveAt(c, -1)).toBe(0);
    expect(driveAt(c, 100_000)).toBe(0);
    expect(driveAt(cmd({ amplitude_ma: 0 }), 50)).toBe(0);
  });
});

describe("waveformPoints", () => {
  it("samples one period with zero net charge for alternating polarity", () => {
    // 1 us sampling across exactly one 50 Hz period
    const pts = waveformPoints(cmd(), 20, 20_000);
    expect(pts.length).toBe(20_000);
    const sum = pts.reduce((a, b) => a + b, 0);
    expect(Math.abs(sum)).toBeLessThan(1e-9);
    expect(Math.max(...pts)).toBe(2.0);
    expect(Math.min(...pts)).toBe(-2.0);
  });
});

describe("ScopeModel", () => {
  it("labels each channel with the frequency seen on the wire", () => {
    const m = new ScopeModel();
    m.applyCommand(cmd({ frequency_hz: 10.0, amplitude_ma: 1.0 })); // ice tier
    m.applyCommand(cmd({ channel: "ac2", frequency_hz: 50.0, seq: 2 }));
    expect(m.frequencyHz("ac1")).toBe(10.0);
    expect(m.frequencyHz("ac2")).toBe(50.0);
  });

  it("clears a channel on an explicit stop command", () => {
    const m = new ScopeModel();
    m.applyCommand(cmd());
    expect(m.command("ac1")).not.toBeNull();
    m.applyCommand(cmd({ duration_ms: 0, seq: 2 }));
    expect(m.command("ac1")).toBeNull();
    expect(m.frequencyHz("ac1")).toBeNull();
    m.applyCommand(cmd({ electrodes: [], seq: 3 }));
    expect(m.command("ac1")).toBeNull();
  });

  it("keeps a bounded measured-current trail", () => {
    const m = new ScopeModel();
    for (let i = 0; i < 700; i++) {
      const t: TelemetryMsg = {
        type: "telemetry",
        seq: i,
        t_us: i * 1000,
        measured_ma: [i % 5, 0],
        power_draw_ma: 130,
        switch_bits: 0,
        load_kohm: 50,
      };
      m.applyTelemetry(t);
    }
    expect(m.measured.length).toBe(512);
    expect(m.measured.at(-1)!.tUs).toBe(699_000); // newest kept
  });
});
