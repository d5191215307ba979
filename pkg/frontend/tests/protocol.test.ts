import { describe, expect, it } from "vitest";

import {
  decodeFrame,
  FORMAT_PNG,
  FORMAT_RAW,
  FrameError,
  HEADER_SIZE,
  hello,
  rawPixels,
  save,
  setCamera,
  setTint,
  stroke,
} from "../src/protocol";

function buildFrame(width: number, height: number, format: number,
                    payload: Uint8Array, magic = "RCGS",
                    declaredLength = payload.length): ArrayBuffer {
  const buffer = new ArrayBuffer(HEADER_SIZE + payload.length);
  const view = new DataView(buffer);
  for (let i = 0; i < 4; i++) view.setUint8(i, magic.charCodeAt(i));
  view.setUint32(4, width, true);
  view.setUint32(8, height, true);
  view.setUint32(12, format, true);
  view.setUint32(16, declaredLength, true);
  new Uint8Array(buffer, HEADER_SIZE).set(payload);
  return buffer;
}

describe("decodeFrame", () => {
  it("decodes a raw frame", () => {
    const payload = new Uint8Array(2 * 2 * 4).map((_, i) => i);
    const frame = decodeFrame(buildFrame(2, 2, FORMAT_RAW, payload));
    expect(frame.width).toBe(2);
    expect(frame.height).toBe(2);
    expect(frame.format).toBe(FORMAT_RAW);
    expect(Array.from(frame.payload)).toEqual(Array.from(payload));
    expect(rawPixels(frame)).toHaveLength(16);
  });

  it("passes png payloads through untouched", () => {
    const payload = new Uint8Array([0x89, 0x50, 0x4e, 0x47, 1, 2, 3]);
    const frame = decodeFrame(buildFrame(32, 32, FORMAT_PNG, payload));
    expect(frame.format).toBe(FORMAT_PNG);
    expect(frame.payload).toHaveLength(7);
    expect(() => rawPixels(frame)).toThrow(FrameError);
  });

  it("rejects short buffers", () => {
    expect(() => decodeFrame(new ArrayBuffer(HEADER_SIZE - 1))).toThrow(FrameError);
  });

  it("rejects bad magic", () => {
    const payload = new Uint8Array(4);
    expect(() => decodeFrame(buildFrame(1, 1, FORMAT_RAW, payload, "RCGX")))
      .toThrow(/magic/);
  });

  it("rejects truncated payloads", () => {
    const payload = new Uint8Array(8);
    expect(() => decodeFrame(buildFrame(1, 1, FORMAT_RAW, payload, "RCGS", 16)))
      .toThrow(/payload length/);
  });

  it("rejects raw frames whose size disagrees with dimensions", () => {
    const payload = new Uint8Array(4);
    expect(() => decodeFrame(buildFrame(2, 2, FORMAT_RAW, payload)))
      .toThrow(/raw payload/);
  });

  it("rejects unknown format codes", () => {
    const payload = new Uint8Array(4);
    expect(() => decodeFrame(buildFrame(1, 1, 7, payload))).toThrow(/format code/);
  });
});

describe("message builders", () => {
  it("shape matches the wire protocol", () => {
    expect(hello("png")).toEqual({ type: "hello", format: "png" });
    expect(setCamera([1, 2, 3], [0, 0, 0])).toEqual(
      { type: "set_camera", position: [1, 2, 3], target: [0, 0, 0], up: [0, 1, 0] });
    expect(stroke("brush", [[4, 5], [6, 7]], 2.5)).toEqual(
      { type: "stroke", tool: "brush", path: [[4, 5], [6, 7]], radius: 2.5 });
    expect(setTint([1, 0.2, 0.2])).toEqual({ type: "set_tint", rgb: [1, 0.2, 0.2] });
    expect(save("/tmp/out.ply")).toEqual({ type: "save", path: "/tmp/out.ply" });
  });
});
