/** Rebuild tactile frames from base64 chunk messages, tolerating interleave. */

import type { FrameChunkMsg } from "./types.js";

export interface AssembledFrame {
  frameSeq: number;
  width: number;
  height: number;
  pixels: Uint8Array; // row-major u8, length = width * height
}

export function b64ToBytes(b64: string): Uint8Array {
  const bin = atob(b64);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out;
}

export class FrameAssembler {
  private pending = new Map<number, Map<number, FrameChunkMsg>>();

  /** Feed one chunk; returns the frame once all of its chunks arrived. */
  feed(chunk: FrameChunkMsg): AssembledFrame | null {
    let got = this.pending.get(chunk.frame_seq);
    if (!got) {
      got = new Map();
      this.pending.set(chunk.frame_seq, got);
    }
    got.set(chunk.chunk_index, chunk);
    if (got.size < chunk.chunk_count) return null;
    this.pending.delete(chunk.frame_seq);

    const parts = [...got.values()].sort((a, b) => a.chunk_index - b.chunk_index);
    if (parts.some((p) => p.chunk_count !== parts.length)) {
      throw new Error(`frame ${chunk.frame_seq}: inconsistent chunk counts`);
    }
    const pixels = new Uint8Array(chunk.width * chunk.height);
    let total = 0;
    for (const p of parts) {
      const data = b64ToBytes(p.data_b64);
      pixels.set(data, p.offset);
      total += data.length;
    }
    if (total !== pixels.length) {
      throw new Error(
        `frame ${chunk.frame_seq}: ${total} bytes for ${chunk.width}x${chunk.height}`,
      );
    }
    return {
      frameSeq: chunk.frame_seq,
      width: chunk.width,
      height: chunk.height,
      pixels,
    };
  }
}
