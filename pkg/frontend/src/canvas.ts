// Canvas renderer: image, live contour polyline, anchor handles, status text.

import { HANDLE_RADIUS_PX } from "./pointer.js";
import type { ViewState } from "./state.js";

export interface RenderResources {
  image: ImageBitmap | null; // decoded separately; keyed by state.imagePngB64
}

export function render(
  ctx: CanvasRenderingContext2D,
  state: ViewState,
  res: RenderResources,
  scale: number,
): void {
  const canvas = ctx.canvas;
  ctx.save();
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  if (state.connection !== "open") {
    ctx.fillStyle = "#222";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    ctx.fillStyle = "#f66";
    ctx.font = "16px sans-serif";
    ctx.fillText("connection lost - reconnecting...", 16, 28);
    ctx.restore();
    return;
  }

  ctx.scale(scale, scale);
  if (res.image) {
    ctx.drawImage(res.image, 0, 0);
  }

  if (state.polyline && state.polyline.length >= 4) {
    const pts = state.polyline;
    ctx.beginPath();
    ctx.moveTo(pts[0], pts[1]);
    for (let i = 1; i < pts.length / 2; i++) {
      ctx.lineTo(pts[2 * i], pts[2 * i + 1]);
    }
    ctx.closePath();
    ctx.strokeStyle = state.pendingEdit ? "#ffd24d" : "#4dff7a";
    ctx.lineWidth = 1.5 / scale;
    ctx.stroke();
  }

  for (const a of state.anchors) {
    ctx.beginPath();
    ctx.arc(a.x, a.y, HANDLE_RADIUS_PX / scale, 0, 2 * Math.PI);
    ctx.strokeStyle = "#ff4d6d";
    ctx.lineWidth = 2 / scale;
    ctx.stroke();
    ctx.beginPath();
    ctx.arc(a.x, a.y, 1.5 / scale, 0, 2 * Math.PI);
    ctx.fillStyle = "#ff4d6d";
    ctx.fill();
  }
  ctx.restore();

  ctx.save();
  ctx.fillStyle = "#9f9";
  ctx.font = "13px monospace";
  const latency = state.lastLatencyMs === null ? "-" : `${state.lastLatencyMs.toFixed(0)} ms`;
  ctx.fillText(
    `rtt ${latency}  iters ${state.iterations}  ` +
      `${state.converged ? "converged" : "moving"}  tool ${state.tool}` +
      (state.pendingEdit ? "  [edit in flight]" : ""),
    8,
    canvas.height - 8,
  );
  if (state.lastError) {
    ctx.fillStyle = "#f66";
    ctx.fillText(state.lastError, 8, 18);
  }
  ctx.restore();
}
