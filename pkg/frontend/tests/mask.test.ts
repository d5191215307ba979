import { describe, expect, it } from "vitest";

import { MaskOverlay } from "../src/mask";

function setPixels(overlay: MaskOverlay): Set<string> {
  const out = new Set<string>();
  for (let v = 0; v < overlay.height; v++) {
    for (let u = 0; u < overlay.width; u++) {
      if (overlay.bits[v * overlay.width + u]) out.add(`${u},${v}`);
    }
  }
  return out;
}

describe("MaskOverlay strokes", () => {
  it("radius-1 dot paints the cross of five pixels, same as the server", () => {
    const overlay = new MaskOverlay(16, 16);
    overlay.applyStroke("brush", [[5, 5]], 1);
    expect(setPixels(overlay)).toEqual(
      new Set(["5,5", "4,5", "6,5", "5,4", "5,6"]));
  });

  it("segments connect their endpoints", () => {
    const overlay = new MaskOverlay(32, 8);
    overlay.applyStroke("brush", [[2, 4], [29, 4]], 0.5);
    for (let u = 2; u <= 29; u++) expect(overlay.bits[4 * 32 + u]).toBe(1);
    expect(overlay.count()).toBe(28);
  });

  it("rubber clears what the brush painted", () => {
    const overlay = new MaskOverlay(16, 16);
    overlay.applyStroke("brush", [[8, 8]], 4);
    const painted = overlay.count();
    overlay.applyStroke("rubber", [[8, 8]], 4);
    expect(painted).toBeGreaterThan(0);
    expect(overlay.count()).toBe(0);
  });

  it("out-of-bounds strokes are clipped, not errors", () => {
    const overlay = new MaskOverlay(8, 8);
    overlay.applyStroke("brush", [[-10, -10], [20, 20]], 1);
    expect(overlay.count()).toBeGreaterThan(0);
  });

  it("rejects bad input", () => {
    const overlay = new MaskOverlay(8, 8);
    expect(() => overlay.applyStroke("spray" as never, [[1, 1]], 1)).toThrow();
    expect(() => overlay.applyStroke("brush", [], 1)).toThrow();
    expect(() => overlay.applyStroke("brush", [[1, 1]], -2)).toThrow();
    expect(() => new MaskOverlay(0, 4)).toThrow();
  });
});

describe("overlay rendering", () => {
  it("toRGBA marks exactly the masked pixels", () => {
    const overlay = new MaskOverlay(4, 4);
    overlay.applyStroke("brush", [[1, 1]], 0);
    const rgba = overlay.toRGBA();
    expect(rgba[(1 * 4 + 1) * 4 + 3]).toBeGreaterThan(0);
    expect(rgba.filter((_, i) => i % 4 === 3 && rgba[i] > 0)).toHaveLength(1);
  });

  it("blendInto leaves unmasked pixels untouched", () => {
    const overlay = new MaskOverlay(2, 1);
    overlay.applyStroke("brush", [[0, 0]], 0);
    const pixels = new Uint8ClampedArray([10, 20, 30, 255, 10, 20, 30, 255]);
    overlay.blendInto(pixels);
    expect(pixels.slice(4)).toEqual(new Uint8ClampedArray([10, 20, 30, 255]));
    expect(pixels[0]).toBeGreaterThan(10);
    expect(() => overlay.blendInto(new Uint8ClampedArray(4))).toThrow();
  });
});
