// Application wiring: connect to the session service, translate pointer events
// into anchor edits (drags throttled), and redraw on every accepted state.

import { render, type RenderResources } from "./canvas.js";
import { SessionClient } from "./client.js";
import { pointerDownMessage, pointerDragMessage, hitAnchor } from "./pointer.js";
import type { ClientMessage, ServerMessage } from "./protocol.js";
import {
  applyServerMessage,
  initialState,
  markPending,
  setConnection,
  setTool,
  type Tool,
  type ViewState,
} from "./state.js";
import { RateLimiter } from "./throttle.js";

const MAX_DRAG_MESSAGES_PER_S = 30;
const SCALE = 2; // screen pixels per image pixel

let state: ViewState = initialState();
let resources: RenderResources = { image: null };
let lastImageKey: string | null = null;

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const seedInput = document.getElementById("seed") as HTMLInputElement;
const serverInput = document.getElementById("server") as HTMLInputElement;

function redraw(): void {
  render(ctx, state, resources, SCALE);
}

function update(next: ViewState): void {
  state = next;
  if (state.imagePngB64 && state.imagePngB64 !== lastImageKey) {
    lastImageKey = state.imagePngB64;
    const bytes = Uint8Array.from(atob(state.imagePngB64), (c) => c.charCodeAt(0));
    createImageBitmap(new Blob([bytes], { type: "image/png" })).then((bmp) => {
      resources = { image: bmp };
      if (state.shape) {
        canvas.width = state.shape[1] * SCALE;
        canvas.height = state.shape[0] * SCALE;
      }
      redraw();
    });
  }
  requestAnimationFrame(redraw);
}

let client: SessionClient | null = null;

function connect(): void {
  client?.close();
  update(initialState());
  client = new SessionClient(
    serverInput.value,
    (msg: ServerMessage) => update(applyServerMessage(state, msg, performance.now())),
    (open) => update(setConnection(state, open ? "open" : "closed")),
  );
  client.send(
    { kind: "open", payload: { phantom: { seed: Number(seedInput.value), corruption: 1 } } },
    performance.now(),
  );
}

function sendEdit(msg: ClientMessage): void {
  if (!client) return;
  update(markPending(state));
  client.send(msg, performance.now());
}

const dragLimiter = new RateLimiter<ClientMessage>(MAX_DRAG_MESSAGES_PER_S, sendEdit);

function toImageCoords(ev: PointerEvent) {
  const rect = canvas.getBoundingClientRect();
  return {
    x: (ev.clientX - rect.left) / SCALE,
    y: (ev.clientY - rect.top) / SCALE,
    screenScale: SCALE,
  };
}

let dragging: number | null = null;

canvas.addEventListener("pointerdown", (ev) => {
  const pos = toImageCoords(ev);
  if (state.tool === "move") {
    dragging = hitAnchor(state, pos);
    return;
  }
  const msg = pointerDownMessage(state, pos);
  if (msg) sendEdit(msg);
});

canvas.addEventListener("pointermove", (ev) => {
  if (dragging === null || state.tool !== "move") return;
  const msg = pointerDragMessage(state, dragging, toImageCoords(ev));
  if (msg) dragLimiter.submit(msg);
});

canvas.addEventListener("pointerup", () => {
  dragging = null;
});

for (const tool of ["add", "move", "delete"] as Tool[]) {
  document.getElementById(`tool-${tool}`)!.addEventListener("click", () => {
    update(setTool(state, tool));
  });
}
document.getElementById("connect")!.addEventListener("click", connect);
document.getElementById("reset")!.addEventListener("click", () => {
  if (client && state.sessionId) {
    sendEdit({ kind: "reset", session_id: state.sessionId });
  }
});
document.getElementById("export")!.addEventListener("click", () => {
  if (state.sessionId) {
    const base = serverInput.value.replace(/^ws/, "http").replace(/\/ws$/, "");
    window.open(`${base}/sessions/${state.sessionId}/export`, "_blank");
  }
});

redraw();
