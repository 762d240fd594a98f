/**
 * Command gauges: a vertical bar for the linear command and a dial needle
 * for the angular command, drawn on small 2D canvases every frame.
 */

import type { Command } from "./protocol.js";

export function drawLinearBar(ctx: CanvasRenderingContext2D, value: number): void {
  const { width: w, height: h } = ctx.canvas;
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#222";
  ctx.fillRect(0, 0, w, h);
  ctx.strokeStyle = "#555";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
  const mid = h / 2;
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.moveTo(0, mid);
  ctx.lineTo(w, mid);
  ctx.stroke();
  const extent = (value * (h / 2 - 2)) | 0;
  ctx.fillStyle = value >= 0 ? "#4caf50" : "#e57373";
  if (extent >= 0) {
    ctx.fillRect(3, mid - extent, w - 6, extent);
  } else {
    ctx.fillRect(3, mid, w - 6, -extent);
  }
}

export function drawAngularDial(ctx: CanvasRenderingContext2D, value: number): void {
  const { width: w, height: h } = ctx.canvas;
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#222";
  ctx.fillRect(0, 0, w, h);
  const cx = w / 2;
  const cy = h - 8;
  const r = Math.min(w / 2, h) - 12;
  ctx.strokeStyle = "#555";
  ctx.beginPath();
  ctx.arc(cx, cy, r, Math.PI, 2 * Math.PI);
  ctx.stroke();
  // value +1 (full counterclockwise robot turn) points the needle left
  const angle = -Math.PI / 2 - value * (Math.PI / 2.4);
  ctx.strokeStyle = "#64b5f6";
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.lineTo(cx + r * Math.sin(angle), cy + r * Math.cos(angle));
  ctx.stroke();
  ctx.lineWidth = 1;
}

export function drawGauges(
  linear: CanvasRenderingContext2D,
  angular: CanvasRenderingContext2D,
  cmd: Command,
): void {
  drawLinearBar(linear, cmd.linear);
  drawAngularDial(angular, cmd.angular);
}
