// Messages exchanged with the server over /session. JSON text frames; every
// message carries proto = "worldwalk/1".

export const PROTOCOL = "worldwalk/1";

export interface Pose {
  R: number[]; // row-major 3x3, camera-to-world
  t: [number, number, number]; // camera center
}

export interface Intrinsics {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
}

export interface ParamOverrides {
  eta?: number;
  theta_deg?: number;
  frames?: number; // >= 2 and 1 mod 4
}

// client -> server

export interface InitMessage {
  proto: typeof PROTOCOL;
  type: "init";
  scene?: Record<string, unknown>;
  image_png_b64?: string;
  depth_pfm_b64?: string; // required with image_png_b64
  overrides?: ParamOverrides;
}

export interface ResetMessage extends Omit<InitMessage, "type"> {
  type: "reset";
}

export interface ActionMessage extends ParamOverrides {
  proto: typeof PROTOCOL;
  type: "action";
  keys: string; // subset of "WASD", or "" / "IDLE"
}

export type ClientMessage = InitMessage | ResetMessage | ActionMessage;

// server -> client

export interface ReadyMessage {
  proto: typeof PROTOCOL;
  type: "ready";
  session_id: number;
  intrinsics: Intrinsics;
  f: number;
  eta: number;
  theta_deg: number;
  pose: Pose;
}

export interface FrameMessage {
  proto: typeof PROTOCOL;
  type: "frame";
  step: number;
  k: number; // 1..f
  pose: Pose;
  png_b64: string;
}

export interface RetrievalMessage {
  proto: typeof PROTOCOL;
  type: "retrieval";
  step: number;
  entries: { index: number; score: number }[];
}

export interface SteppedMessage {
  proto: typeof PROTOCOL;
  type: "stepped";
  step: number;
  occupancy: number;
  evictions: number[];
  pose: Pose;
}

export type ErrorCode =
  | "bad_message"
  | "proto_mismatch"
  | "not_initialized"
  | "queue_full"
  | "init_failed"
  | "step_failed";

export interface ErrorMessage {
  proto: typeof PROTOCOL;
  type: "error";
  code: ErrorCode;
  message: string;
}

export type ServerMessage = ReadyMessage | FrameMessage | RetrievalMessage | SteppedMessage | ErrorMessage;
