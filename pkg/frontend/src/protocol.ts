// Wire protocol shared with the edit server. A frame is a 20-byte
// little-endian header (magic "RCGS", width, height, format, payloadLength)
// followed by the payload; everything else on the socket is JSON text.

export const FRAME_MAGIC = "RCGS";
export const HEADER_SIZE = 20;
export const FORMAT_RAW = 0; // RGBA8, row-major, payload = w*h*4 bytes
export const FORMAT_PNG = 1;

export interface DecodedFrame {
  width: number;
  height: number;
  format: number;
  payload: Uint8Array;
}

export class FrameError extends Error {}

export function decodeFrame(buffer: ArrayBuffer): DecodedFrame {
  if (buffer.byteLength < HEADER_SIZE) {
    throw new FrameError(`frame shorter than header: ${buffer.byteLength} bytes`);
  }
  const view = new DataView(buffer);
  const magic = String.fromCharCode(
    view.getUint8(0), view.getUint8(1), view.getUint8(2), view.getUint8(3));
  if (magic !== FRAME_MAGIC) {
    throw new FrameError(`bad frame magic ${JSON.stringify(magic)}`);
  }
  const width = view.getUint32(4, true);
  const height = view.getUint32(8, true);
  const format = view.getUint32(12, true);
  const payloadLength = view.getUint32(16, true);
  if (format !== FORMAT_RAW && format !== FORMAT_PNG) {
    throw new FrameError(`unknown frame format code ${format}`);
  }
  if (buffer.byteLength !== HEADER_SIZE + payloadLength) {
    throw new FrameError(
      `payload length ${buffer.byteLength - HEADER_SIZE} does not match header ${payloadLength}`);
  }
  if (format === FORMAT_RAW && payloadLength !== width * height * 4) {
    throw new FrameError(
      `raw payload ${payloadLength} bytes for ${width}x${height} frame`);
  }
  return { width, height, format, payload: new Uint8Array(buffer, HEADER_SIZE) };
}

/** Raw frame payload as ImageData-compatible pixels. */
export function rawPixels(frame: DecodedFrame): Uint8ClampedArray<ArrayBuffer> {
  if (frame.format !== FORMAT_RAW) {
    throw new FrameError("rawPixels called on a non-raw frame");
  }
  return new Uint8ClampedArray(frame.payload.buffer as ArrayBuffer,
                               frame.payload.byteOffset, frame.payload.byteLength);
}

// -- client -> server messages ---------------------------------------------

export type Vec3 = [number, number, number];
export type StrokeTool = "brush" | "rubber";

export const hello = (format: "raw" | "png") => ({ type: "hello", format });

export const setCamera = (position: Vec3, target: Vec3, up: Vec3 = [0, 1, 0]) =>
  ({ type: "set_camera", position, target, up });

export const enterSelection = () => ({ type: "enter_selection" });

export const stroke = (tool: StrokeTool, path: [number, number][], radius: number) =>
  ({ type: "stroke", tool, path, radius });

export const commitSelection = () => ({ type: "commit_selection" });
export const clearSelection = () => ({ type: "clear_selection" });

export const setTint = (rgb: Vec3) => ({ type: "set_tint", rgb });

export const pause = () => ({ type: "pause" });
export const resume = () => ({ type: "resume" });
export const stop = () => ({ type: "stop" });
export const save = (path: string) => ({ type: "save", path });

// -- server -> client messages ----------------------------------------------

export interface StatusMessage {
  type: "status";
  iteration: number;
  loss: number;
  ips: number;
  generation: number;
}

export interface SelectionInfo {
  type: "selection_info";
  cloudSize: number;
  generation: number;
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage =
  | StatusMessage
  | SelectionInfo
  | ErrorMessage
  | { type: string; [key: string]: unknown };
