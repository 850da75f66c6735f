/** Waveform scope: reconstructs the commanded drive waveform for display and
 * keeps a trail of measured currents from telemetry. Pure model, no canvas. */

import type { Channel, StimCommandMsg, TelemetryMsg } from "./types.js";

/** Drive in mA at time t_us into the train, per the command's parameters. */
export function driveAt(cmd: StimCommandMsg, tUs: number): number {
  if (tUs < 0 || tUs >= cmd.duration_ms * 1000 || cmd.amplitude_ma <= 0) return 0;
  const periodUs = 1e6 / cmd.frequency_hz;
  const phase = tUs % periodUs;
  const pw = cmd.pulse_width_us;
  switch (cmd.polarity) {
    case "positive":
      return phase < pw ? cmd.amplitude_ma : 0;
    case "negative":
      return phase < pw ? -cmd.amplitude_ma : 0;
    case "alternating":
      if (phase < pw) return cmd.amplitude_ma;
      if (phase >= periodUs / 2 && phase < periodUs / 2 + pw) return -cmd.amplitude_ma;
      return 0;
  }
}

/** n samples of the drive across [0, windowMs), for a polyline. */
export function waveformPoints(cmd: StimCommandMsg, windowMs: number, n: number): Float64Array {
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    out[i] = driveAt(cmd, (i * windowMs * 1000) / n);
  }
  return out;
}

export interface MeasuredPoint {
  tUs: number;
  ac1: number;
  ac2: number;
}

const TRAIL = 512;

export class ScopeModel {
  private commands = new Map<Channel, StimCommandMsg>();
  readonly measured: MeasuredPoint[] = [];

  applyCommand(cmd: StimCommandMsg): void {
    if (cmd.duration_ms <= 0 || cmd.electrodes.length === 0) {
      this.commands.delete(cmd.channel); // explicit stop
    } else {
      this.commands.set(cmd.channel, cmd);
    }
  }

  applyTelemetry(t: TelemetryMsg): void {
    this.measured.push({ tUs: t.t_us, ac1: t.measured_ma[0], ac2: t.measured_ma[1] });
    if (this.measured.length > TRAIL) this.measured.splice(0, this.measured.length - TRAIL);
  }

  command(channel: Channel): StimCommandMsg | null {
    return this.commands.get(channel) ?? null;
  }

  /** The frequency the scope labels a channel with — straight off the wire. */
  frequencyHz(channel: Channel): number | null {
    return this.commands.get(channel)?.frequency_hz ?? null;
  }
}
