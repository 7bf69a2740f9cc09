// View model for the cockpit. The server owns all world state; this only
// mirrors what has been received.

import type { Intrinsics, ParamOverrides, ServerMessage } from "./protocol.js";

export type ConnectionStatus = "connecting" | "ready" | "disconnected" | "error";

export interface UiSessionView {
  status: ConnectionStatus;
  errorBanner?: string;
  intrinsics?: Intrinsics;
  step: number; // never decreases
  frameK: number; // k of the frame on screen within `step`
  frame?: ImageBitmap;
  position: [number, number, number];
  yawDeg: number;
  occupancy: number;
  retrieval: { index: number; score: number }[];
  queuedActions: number;
  decodeFailures: number;
  params: Required<ParamOverrides>;
}

/// Keydowns closer together than this merge into one action.
export const COMBO_WINDOW_MS = 50;
/// Actions typed while disconnected are dropped after this long.
export const OFFLINE_QUEUE_MS = 5000;

/// Canonical WASD subset for a set of pressed keys; null when none apply.
export function keysFor(pressed: Iterable<string>): string | null {
  const set = new Set<string>();
  for (const k of pressed) {
    const up = k.toUpperCase();
    if ("WASD".includes(up) && up.length === 1) set.add(up);
  }
  const out = ["W", "A", "S", "D"].filter((k) => set.has(k)).join("");
  return out.length ? out : null;
}

export interface Cockpit {
  connect(url: string): void;
  onKeyDown(event: KeyboardEvent): void;
  onMessage(message: ServerMessage): void;
  view(): Readonly<UiSessionView>;
}
