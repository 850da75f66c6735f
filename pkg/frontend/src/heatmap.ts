/** Pure pixel math for the tactile-frame panel: colormap and contact centroid. */

import type { AssembledFrame } from "./assemble.js";

// resting membrane luminance; pixels darker than this are contact deficit
export const BASELINE = 0.8;
const NOISE_FLOOR = 0.05;

/**
 * Deficit-weighted centroid of the contact, in pixel coordinates.
 * Null when the frame shows no contact above the noise floor.
 */
export function deficitCentroid(
  frame: AssembledFrame,
  baseline: number = BASELINE,
): { x: number; y: number } | null {
  let sum = 0;
  let sx = 0;
  let sy = 0;
  for (let y = 0; y < frame.height; y++) {
    for (let x = 0; x < frame.width; x++) {
      const v = frame.pixels[y * frame.width + x] / 255;
      const d = baseline - v;
      if (d <= NOISE_FLOOR) continue;
      sum += d;
      sx += d * x;
      sy += d * y;
    }
  }
  if (sum === 0) return null;
  return { x: sx / sum, y: sy / sum };
}

/**
 * Map frame pixels to RGBA: baseline grey, contact deficit toward warm,
 * bulge brightening toward cyan. Returns a buffer ready for ImageData.
 */
export function frameToRgba(frame: AssembledFrame, baseline: number = BASELINE) {
  const out = new Uint8ClampedArray(frame.width * frame.height * 4);
  for (let i = 0; i < frame.pixels.length; i++) {
    const v = frame.pixels[i] / 255;
    const d = baseline - v; // >0 indentation, <0 bulge ring
    let r: number, g: number, b: number;
    if (d >= 0) {
      const t = Math.min(d / baseline, 1);
      r = 64 + 191 * t;
      g = 64 + 80 * t;
      b = 64 * (1 - t);
    } else {
      const t = Math.min(-d / (1 - baseline), 1);
      r = 64 * (1 - t);
      g = 64 + 150 * t;
      b = 64 + 191 * t;
    }
    out[i * 4] = r;
    out[i * 4 + 1] = g;
    out[i * 4 + 2] = b;
    out[i * 4 + 3] = 255;
  }
  return out;
}
