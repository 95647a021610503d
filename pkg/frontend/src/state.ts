// View state and its reducer. The rendered state is a pure function of the
// last accepted server message plus the local tool mode: the reducer never
// mutates its input, stale revisions are dropped, and the contour polyline is
// resampled exactly when a new contour arrives.

import { samplePolyline, type ContourDoc } from "./bspline.js";
import type { AnchorInfo, ServerMessage, Weights } from "./protocol.js";

export const POLYLINE_SAMPLES = 256;

export type Tool = "add" | "move" | "delete";
export type Connection = "connecting" | "open" | "closed";

export interface ViewState {
  connection: Connection;
  sessionId: string | null;
  rev: number;
  contour: ContourDoc | null;
  polyline: Float64Array | null;
  anchors: AnchorInfo[];
  weights: Weights | null;
  shape: [number, number] | null;
  imagePngB64: string | null;
  tool: Tool;
  pendingEdit: boolean;
  lastLatencyMs: number | null;
  displacement: number;
  iterations: number;
  converged: boolean;
  lastError: string | null;
}

export function initialState(): ViewState {
  return {
    connection: "connecting",
    sessionId: null,
    rev: -1,
    contour: null,
    polyline: null,
    anchors: [],
    weights: null,
    shape: null,
    imagePngB64: null,
    tool: "add",
    pendingEdit: false,
    lastLatencyMs: null,
    displacement: 0,
    iterations: 0,
    converged: false,
    lastError: null,
  };
}

export function setTool(state: ViewState, tool: Tool): ViewState {
  return { ...state, tool };
}

export function setConnection(state: ViewState, connection: Connection): ViewState {
  return { ...state, connection };
}

export function markPending(state: ViewState): ViewState {
  return { ...state, pendingEdit: true };
}

export function applyServerMessage(
  state: ViewState,
  msg: ServerMessage,
  nowMs?: number,
): ViewState {
  if (msg.kind === "error") {
    return { ...state, pendingEdit: false, lastError: msg.payload.message };
  }
  const p = msg.payload;
  if (p.closed) {
    return { ...initialState(), connection: state.connection, tool: state.tool };
  }
  // a frame older than what is already rendered never replaces newer state
  if (state.sessionId === p.session_id && p.rev < state.rev) {
    return state;
  }
  const latency =
    nowMs !== undefined && typeof msg.echo === "number"
      ? nowMs - msg.echo
      : state.lastLatencyMs;
  return {
    ...state,
    pendingEdit: false,
    lastError: null,
    sessionId: p.session_id,
    rev: p.rev,
    contour: p.contour,
    polyline: samplePolyline(p.contour, POLYLINE_SAMPLES),
    anchors: p.anchors,
    weights: p.weights,
    shape: p.shape,
    imagePngB64: p.image_png_b64 ?? state.imagePngB64,
    lastLatencyMs: latency,
    displacement: p.displacement,
    iterations: p.iterations,
    converged: p.converged,
  };
}
