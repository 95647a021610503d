// Message types of the session service (see docs/protocol.md in the repo root).

import type { ContourDoc } from "./bspline.js";

export interface AnchorInfo {
  id: number;
  x: number;
  y: number;
  rho: number;
  theta: number;
}

export interface Weights {
  alpha: number;
  beta: number;
  gamma: number;
}

export interface StatePayload {
  session_id: string;
  rev: number;
  contour: ContourDoc;
  anchors: AnchorInfo[];
  weights: Weights;
  displacement: number;
  iterations: number;
  converged: boolean;
  stage: string;
  shape: [number, number];
  closed?: boolean;
  dice_stage_one?: number;
  image_png_b64?: string;
  prob_map_png_b64?: string;
}

export interface ErrorPayload {
  code: string;
  message: string;
}

export type ServerMessage =
  | { kind: "state"; payload: StatePayload; echo?: unknown }
  | { kind: "error"; payload: ErrorPayload; echo?: unknown };

export type ClientMessage = {
  kind:
    | "open"
    | "add_anchor"
    | "move_anchor"
    | "remove_anchor"
    | "step"
    | "set_weights"
    | "reset"
    | "close";
  session_id?: string;
  payload?: Record<string, unknown>;
  echo?: unknown;
};
