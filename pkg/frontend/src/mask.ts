// Local-first mask overlay. Strokes are applied optimistically here for
// latency and mirrored to the server, whose copy is authoritative at commit.
// The predicate matches the server exactly: a pixel is affected when its
// integer coordinate lies within `radius` of any stroke segment.

import { StrokeTool } from "./protocol.js";

export const HIGHLIGHT: [number, number, number] = [255, 204, 26];
const HIGHLIGHT_ALPHA = 115;

export class MaskOverlay {
  readonly bits: Uint8Array;

  constructor(readonly width: number, readonly height: number) {
    if (!Number.isInteger(width) || !Number.isInteger(height) || width <= 0 || height <= 0) {
      throw new Error(`bad overlay size ${width}x${height}`);
    }
    this.bits = new Uint8Array(width * height);
  }

  count(): number {
    let n = 0;
    for (const b of this.bits) n += b;
    return n;
  }

  clear(): void {
    this.bits.fill(0);
  }

  applyStroke(tool: StrokeTool, path: [number, number][], radius: number): void {
    if (tool !== "brush" && tool !== "rubber") throw new Error(`unknown tool ${tool}`);
    if (path.length === 0) throw new Error("stroke path is empty");
    if (!Number.isFinite(radius) || radius < 0) throw new Error("bad stroke radius");
    const value = tool === "brush" ? 1 : 0;
    const r2 = radius * radius;
    const segments: [number, number, number, number][] = [];
    for (let i = 0; i + 1 < path.length; i++) {
      segments.push([path[i][0], path[i][1], path[i + 1][0], path[i + 1][1]]);
    }
    if (segments.length === 0) {
      segments.push([path[0][0], path[0][1], path[0][0], path[0][1]]);
    }
    for (const [x0, y0, x1, y1] of segments) {
      const uMin = Math.max(0, Math.floor(Math.min(x0, x1) - radius));
      const uMax = Math.min(this.width - 1, Math.ceil(Math.max(x0, x1) + radius));
      const vMin = Math.max(0, Math.floor(Math.min(y0, y1) - radius));
      const vMax = Math.min(this.height - 1, Math.ceil(Math.max(y0, y1) + radius));
      const segX = x1 - x0;
      const segY = y1 - y0;
      const len2 = segX * segX + segY * segY;
      for (let v = vMin; v <= vMax; v++) {
        for (let u = uMin; u <= uMax; u++) {
          const du = u - x0;
          const dv = v - y0;
          let dist2: number;
          if (len2 < 1e-18) {
            dist2 = du * du + dv * dv;
          } else {
            const t = Math.min(1, Math.max(0, (du * segX + dv * segY) / len2));
            const rx = du - t * segX;
            const ry = dv - t * segY;
            dist2 = rx * rx + ry * ry;
          }
          if (dist2 <= r2) this.bits[v * this.width + u] = value;
        }
      }
    }
  }

  /** Standalone RGBA layer (amber where masked, transparent elsewhere). */
  toRGBA(): Uint8ClampedArray<ArrayBuffer> {
    const rgba = new Uint8ClampedArray(this.width * this.height * 4);
    for (let i = 0; i < this.bits.length; i++) {
      if (!this.bits[i]) continue;
      const o = i * 4;
      rgba[o] = HIGHLIGHT[0];
      rgba[o + 1] = HIGHLIGHT[1];
      rgba[o + 2] = HIGHLIGHT[2];
      rgba[o + 3] = HIGHLIGHT_ALPHA;
    }
    return rgba;
  }

  /** Tint masked pixels into an RGBA buffer of the same dimensions. */
  blendInto(rgba: Uint8ClampedArray): void {
    if (rgba.length !== this.width * this.height * 4) {
      throw new Error("pixel buffer does not match overlay size");
    }
    const a = HIGHLIGHT_ALPHA / 255;
    for (let i = 0; i < this.bits.length; i++) {
      if (!this.bits[i]) continue;
      const o = i * 4;
      rgba[o] = rgba[o] * (1 - a) + HIGHLIGHT[0] * a;
      rgba[o + 1] = rgba[o + 1] * (1 - a) + HIGHLIGHT[1] * a;
      rgba[o + 2] = rgba[o + 2] * (1 - a) + HIGHLIGHT[2] * a;
    }
  }
}
