// Connection layer: one websocket, JSON messages out, frames + JSON in.
// DOM-free so it runs under node in tests; the socket constructor is
// injectable for the same reason.

import { DecodedFrame, decodeFrame, ServerMessage, hello } from "./protocol.js";

export interface SocketLike {
  binaryType: string;
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientEvents {
  onFrame?: (frame: DecodedFrame) => void;
  onMessage?: (message: ServerMessage) => void;
  onConnected?: () => void;
  onDisconnected?: () => void;
  /** Recoverable stream problems: malformed frames, unparseable JSON. */
  onStreamError?: (reason: string) => void;
}

const RETRY_DELAY_MS = 1500;

export class EditClient {
  private socket: SocketLike | null = null;
  private closedByUser = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private events: ClientEvents,
    private frameFormat: "raw" | "png" = "raw",
    private makeSocket: SocketFactory = (u) => new WebSocket(u) as unknown as SocketLike,
  ) {}

  connect(): void {
    this.closedByUser = false;
    const socket = this.makeSocket(this.url);
    socket.binaryType = "arraybuffer";
    socket.onopen = () => {
      socket.send(JSON.stringify(hello(this.frameFormat)));
      this.events.onConnected?.();
    };
    socket.onclose = () => {
      this.events.onDisconnected?.();
      this.socket = null;
      if (!this.closedByUser) {
        this.retryTimer = setTimeout(() => this.connect(), RETRY_DELAY_MS);
      }
    };
    socket.onerror = () => {
      // onclose follows and owns the retry
    };
    socket.onmessage = (ev) => this.handleData(ev.data);
    this.socket = socket;
  }

  close(): void {
    this.closedByUser = true;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.socket?.close();
    this.socket = null;
  }

  get connected(): boolean {
    return this.socket !== null;
  }

  send(message: Record<string, unknown>): void {
    this.socket?.send(JSON.stringify(message));
  }

  private handleData(data: unknown): void {
    if (typeof data === "string") {
      let parsed: ServerMessage;
      try {
        parsed = JSON.parse(data);
      } catch {
        this.events.onStreamError?.("unparseable server message");
        return;
      }
      this.events.onMessage?.(parsed);
      return;
    }
    // binary: either ArrayBuffer (browser) or Buffer (node ws)
    let buffer: ArrayBuffer;
    if (data instanceof ArrayBuffer) {
      buffer = data;
    } else if (ArrayBuffer.isView(data as ArrayBufferView)) {
      const view = data as ArrayBufferView;
      buffer = view.buffer.slice(view.byteOffset, view.byteOffset + view.byteLength) as ArrayBuffer;
    } else {
      this.events.onStreamError?.("unexpected binary payload type");
      return;
    }
    try {
      this.events.onFrame?.(decodeFrame(buffer));
    } catch (err) {
      // a malformed frame is dropped; the stream continues
      this.events.onStreamError?.(String(err));
    }
  }
}
