// Pointer-to-message translation: pure functions from a pointer event in image
// coordinates plus the current state to an outgoing message (or null when the
// event is a no-op, e.g. clicks outside the image or deletes on empty canvas).

import type { ClientMessage } from "./protocol.js";
import type { ViewState } from "./state.js";

export const HANDLE_RADIUS_PX = 8; // screen pixels, independent of zoom

export interface PointerPos {
  x: number; // image coordinates
  y: number;
  screenScale: number; // screen pixels per image pixel, for handle hit tests
}

export function insideImage(state: ViewState, x: number, y: number): boolean {
  if (!state.shape) return false;
  const [h, w] = state.shape;
  return x >= 0 && x <= w - 1 && y >= 0 && y <= h - 1;
}

export function hitAnchor(state: ViewState, pos: PointerPos): number | null {
  const rHit = HANDLE_RADIUS_PX / pos.screenScale;
  let best: number | null = null;
  let bestDist = rHit;
  for (const a of state.anchors) {
    const d = Math.hypot(a.x - pos.x, a.y - pos.y);
    if (d <= bestDist) {
      best = a.id;
      bestDist = d;
    }
  }
  return best;
}

export function pointerDownMessage(state: ViewState, pos: PointerPos): ClientMessage | null {
  if (!state.sessionId || !insideImage(state, pos.x, pos.y)) return null;
  if (state.tool === "add") {
    return {
      kind: "add_anchor",
      session_id: state.sessionId,
      payload: { x: pos.x, y: pos.y },
    };
  }
  const id = hitAnchor(state, pos);
  if (id === null) return null;
  if (state.tool === "delete") {
    return { kind: "remove_anchor", session_id: state.sessionId, payload: { id } };
  }
  return null; // move tool: drag handled via pointerDragMessage
}

export function pointerDragMessage(
  state: ViewState,
  anchorId: number,
  pos: PointerPos,
): ClientMessage | null {
  if (!state.sessionId || !insideImage(state, pos.x, pos.y)) return null;
  return {
    kind: "move_anchor",
    session_id: state.sessionId,
    payload: { id: anchorId, x: pos.x, y: pos.y },
  };
}
