// Edit panel: tint picker, optimizer transport controls, and a loss sparkline
// fed by status messages.

import { EditClient } from "./client.js";
import { pause, resume, save, setTint, StatusMessage, stop, Vec3 } from "./protocol.js";

const SPARK_CAPACITY = 600;

function hexToRgb(hex: string): Vec3 {
  return [
    parseInt(hex.slice(1, 3), 16) / 255,
    parseInt(hex.slice(3, 5), 16) / 255,
    parseInt(hex.slice(5, 7), 16) / 255,
  ];
}

function button(label: string, onClick: () => void): HTMLButtonElement {
  const el = document.createElement("button");
  el.textContent = label;
  el.addEventListener("click", onClick);
  return el;
}

export interface Panel {
  root: HTMLElement;
  update(status: StatusMessage): void;
}

export function buildPanel(client: EditClient): Panel {
  const root = document.createElement("div");
  root.className = "panel";

  const tintRow = document.createElement("div");
  tintRow.className = "row";
  const tintLabel = document.createElement("label");
  tintLabel.textContent = "tint";
  const tint = document.createElement("input");
  tint.type = "color";
  tint.value = "#ff3333";
  tint.addEventListener("input", () => client.send(setTint(hexToRgb(tint.value))));
  tintRow.append(tintLabel, tint);

  const transport = document.createElement("div");
  transport.className = "row";
  transport.append(
    button("pause", () => client.send(pause())),
    button("resume", () => client.send(resume())),
    button("stop", () => client.send(stop())),
  );

  const saveRow = document.createElement("div");
  saveRow.className = "row";
  const savePath = document.createElement("input");
  savePath.type = "text";
  savePath.value = "edited.ply";
  saveRow.append(savePath, button("save", () => client.send(save(savePath.value))));

  const readout = document.createElement("div");
  readout.className = "readout";
  readout.textContent = "iteration 0";

  const spark = document.createElement("canvas");
  spark.width = 240;
  spark.height = 48;
  spark.className = "spark";
  const sparkCtx = spark.getContext("2d")!;
  const losses: number[] = [];

  function drawSpark(): void {
    sparkCtx.clearRect(0, 0, spark.width, spark.height);
    if (losses.length < 2) return;
    const lo = Math.min(...losses);
    const hi = Math.max(...losses);
    const span = Math.max(hi - lo, 1e-12);
    sparkCtx.strokeStyle = "#7fd4a0";
    sparkCtx.beginPath();
    losses.forEach((loss, i) => {
      const x = (i / (losses.length - 1)) * (spark.width - 2) + 1;
      const y = spark.height - 2 - ((loss - lo) / span) * (spark.height - 4);
      i === 0 ? sparkCtx.moveTo(x, y) : sparkCtx.lineTo(x, y);
    });
    sparkCtx.stroke();
  }

  root.append(tintRow, transport, saveRow, readout, spark);

  return {
    root,
    update(status: StatusMessage): void {
      losses.push(status.loss);
      if (losses.length > SPARK_CAPACITY) losses.shift();
      readout.textContent =
        `iteration ${status.iteration}  loss ${status.loss.toFixed(5)}  ` +
        `${status.ips.toFixed(1)} it/s  gen ${status.generation}`;
      drawSpark();
    },
  };
}
