// App assembly: canvas stream viewer with orbit controls in explore mode and
// a zoomable mask editor in selection mode.

import { EditClient } from "./client.js";
import { MaskOverlay } from "./mask.js";
import { defaultOrbit, dolly, orbitCameraMessage, rotate, Throttle } from "./orbit.js";
import { buildPanel } from "./panel.js";
import {
  clearSelection,
  commitSelection,
  DecodedFrame,
  enterSelection,
  FORMAT_RAW,
  rawPixels,
  stroke,
  StrokeTool,
} from "./protocol.js";
import {
  canvasToFrame,
  fitTransform,
  identityTransform,
  panBy,
  ViewTransform,
  zoomAt,
} from "./viewTransform.js";

const params = new URLSearchParams(location.search);
const serverUrl = params.get("server") ?? "ws://127.0.0.1:8765";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
ctx.imageSmoothingEnabled = false;
const banner = document.getElementById("banner")!;
const hint = document.getElementById("hint")!;
const modeButton = document.getElementById("mode") as HTMLButtonElement;
const commitButton = document.getElementById("commit") as HTMLButtonElement;
const clearButton = document.getElementById("clear") as HTMLButtonElement;
const brushButton = document.getElementById("brush") as HTMLButtonElement;
const rubberButton = document.getElementById("rubber") as HTMLButtonElement;
const radiusInput = document.getElementById("radius") as HTMLInputElement;

// frame buffer: latest decoded frame drawn into an offscreen canvas
const frameCanvas = document.createElement("canvas");
const frameCtx = frameCanvas.getContext("2d")!;
const overlayCanvas = document.createElement("canvas");
const overlayCtx = overlayCanvas.getContext("2d")!;

let selecting = false;
let transform: ViewTransform = identityTransform();
let overlay: MaskOverlay | null = null;
let tool: StrokeTool = "brush";
let haveFrame = false;

function showHint(text: string): void {
  hint.textContent = text;
  hint.classList.add("visible");
  setTimeout(() => hint.classList.remove("visible"), 1800);
}

async function acceptFrame(frame: DecodedFrame): Promise<void> {
  if (frameCanvas.width !== frame.width || frameCanvas.height !== frame.height) {
    frameCanvas.width = frame.width;
    frameCanvas.height = frame.height;
    transform = fitTransform(frame.width, frame.height, canvas.width, canvas.height);
  }
  if (frame.format === FORMAT_RAW) {
    frameCtx.putImageData(
      new ImageData(rawPixels(frame), frame.width, frame.height), 0, 0);
  } else {
    const bitmap = await createImageBitmap(
      new Blob([frame.payload as BlobPart], { type: "image/png" }));
    frameCtx.drawImage(bitmap, 0, 0);
    bitmap.close();
  }
  haveFrame = true;
}

function redraw(): void {
  ctx.setTransform(1, 0, 0, 1, 0, 0);
  ctx.fillStyle = "#14161a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (haveFrame) {
    ctx.setTransform(transform.zoom, 0, 0, transform.zoom, transform.panX, transform.panY);
    ctx.drawImage(frameCanvas, 0, 0);
    if (selecting && overlay !== null) {
      overlayCtx.putImageData(
        new ImageData(overlay.toRGBA(), overlay.width, overlay.height), 0, 0);
      ctx.drawImage(overlayCanvas, 0, 0);
    }
  }
  requestAnimationFrame(redraw);
}

const client = new EditClient(serverUrl, {
  onFrame: (frame) => void acceptFrame(frame),
  onConnected: () => banner.classList.remove("visible"),
  onDisconnected: () => banner.classList.add("visible"),
  onMessage: (message) => {
    if (message.type === "status") {
      panel.update(message as never);
    } else if (message.type === "error") {
      showHint(String((message as { message?: unknown }).message ?? "server error"));
    } else if (message.type === "selection_info") {
      const info = message as { cloudSize?: number };
      showHint(`selection: ${info.cloudSize ?? 0} points`);
    }
  },
  onStreamError: (reason) => console.warn("stream:", reason),
});

const panel = buildPanel(client);
document.getElementById("sidebar")!.append(panel.root);

// -- explore mode: orbit --------------------------------------------------------

let orbit = defaultOrbit();
const cameraThrottle = new Throttle(34); // <= ~30 msgs/s
let dragging = false;
let lastX = 0;
let lastY = 0;

function sendCamera(force = false): void {
  if (force || cameraThrottle.ready()) client.send(orbitCameraMessage(orbit));
}

canvas.addEventListener("pointerdown", (ev) => {
  dragging = true;
  lastX = ev.offsetX;
  lastY = ev.offsetY;
  canvas.setPointerCapture(ev.pointerId);
  if (selecting) paintTo(ev.offsetX, ev.offsetY, true);
});

canvas.addEventListener("pointermove", (ev) => {
  if (!dragging) return;
  const dx = ev.offsetX - lastX;
  const dy = ev.offsetY - lastY;
  if (selecting) {
    if (ev.shiftKey) {
      transform = panBy(transform, dx, dy);
    } else {
      paintTo(ev.offsetX, ev.offsetY, false);
    }
  } else {
    orbit = rotate(orbit, dx * 0.01, dy * 0.01);
    sendCamera();
  }
  lastX = ev.offsetX;
  lastY = ev.offsetY;
});

canvas.addEventListener("pointerup", () => {
  dragging = false;
  if (!selecting) sendCamera(true); // settle on the final pose
});

canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
  if (selecting) {
    transform = zoomAt(transform, factor, { x: ev.offsetX, y: ev.offsetY });
  } else {
    orbit = dolly(orbit, 1 / factor);
    sendCamera();
  }
});

// -- selection mode: paint ------------------------------------------------------

let pendingPath: [number, number][] = [];

function paintTo(canvasX: number, canvasY: number, start: boolean): void {
  if (overlay === null) {
    showHint("enter selection mode first");
    return;
  }
  const pt = canvasToFrame({ x: canvasX, y: canvasY }, transform);
  const framePt: [number, number] = [pt.x, pt.y];
  const radius = Number(radiusInput.value);
  if (start) pendingPath = [];
  pendingPath.push(framePt);
  // optimistic local segment; server copy catches up one message later
  const recent = pendingPath.slice(-2);
  overlay.applyStroke(tool, recent as [number, number][], radius);
  client.send(stroke(tool, recent, radius));
}

modeButton.addEventListener("click", () => {
  if (!selecting) {
    client.send(enterSelection());
    selecting = true;
    overlay = new MaskOverlay(frameCanvas.width, frameCanvas.height);
    overlayCanvas.width = frameCanvas.width;
    overlayCanvas.height = frameCanvas.height;
    modeButton.textContent = "exploring: off";
  } else {
    client.send(clearSelection());
    selecting = false;
    overlay = null;
    modeButton.textContent = "select";
  }
});

commitButton.addEventListener("click", () => {
  if (!selecting) {
    showHint("nothing to commit");
    return;
  }
  client.send(commitSelection());
  selecting = false;
  overlay = null;
  modeButton.textContent = "select";
});

clearButton.addEventListener("click", () => {
  overlay?.clear();
  client.send(clearSelection());
});

brushButton.addEventListener("click", () => {
  tool = "brush";
  brushButton.classList.add("active");
  rubberButton.classList.remove("active");
});

rubberButton.addEventListener("click", () => {
  tool = "rubber";
  rubberButton.classList.add("active");
  brushButton.classList.remove("active");
});

client.connect();
requestAnimationFrame(redraw);
