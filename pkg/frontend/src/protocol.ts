/**
 * Wire types for the session-service WebSocket protocol (docs/protocol.md).
 * Text frames carry one JSON message each; binary frames carry a 4-byte
 * little-endian frame index followed by PNG bytes of the base video frame.
 */

export const PROTOCOL_VERSION = 1;
export const APPEND_BATCH_LIMIT = 16;
export const SET_PARAM_DEBOUNCE_MS = 50;

export type EffectKind =
  | "binding"
  | "flipbook"
  | "trigger"
  | "particles"
  | "trajectory"
  | "contour";

export const EFFECT_KINDS: EffectKind[] = [
  "binding",
  "flipbook",
  "trigger",
  "particles",
  "trajectory",
  "contour",
];

export interface StrokeStyle {
  color: [number, number, number, number];
  width: number;
  opacity: number;
}

export const DEFAULT_STYLE: StrokeStyle = { color: [30, 30, 30, 255], width: 3, opacity: 1 };

export type PointKind = "color" | "keypoint";

export type SessionCommand =
  | { kind: "pause_video" }
  | { kind: "resume_video" }
  | { kind: "select_track_point"; x: number; y: number; point_kind: PointKind }
  | { kind: "begin_stroke"; style?: StrokeStyle }
  | { kind: "append_points"; points: [number, number][] }
  | { kind: "end_stroke" }
  | { kind: "group_element" }
  | {
      kind: "apply_effect";
      effect_kind: EffectKind;
      params?: Record<string, unknown>;
      element_ids?: string[];
      tracker_ids?: string[];
    }
  | { kind: "set_param"; effect_id: string; key: string; value: unknown }
  | { kind: "add_flipbook_frame" }
  | { kind: "save_flipbook"; params?: Record<string, unknown> }
  | { kind: "undo" };

export interface ServerHello {
  type: "hello";
  protocol: number;
  frame_size: [number, number];
  role: "author" | "observer";
  frame: number;
  mode: "paused" | "playing";
}

export interface ServerOverlay {
  type: "overlay";
  frame: number;
  svg: string;
}

export interface ServerEvent {
  kind: string;
  [key: string]: unknown;
}

export interface ServerEvents {
  type: "events";
  seq: number | null;
  events: ServerEvent[];
}

export interface ServerUnsolicited {
  type: "event";
  event: ServerEvent;
}

export type ServerMessage = ServerHello | ServerOverlay | ServerEvents | ServerUnsolicited;

/** Parse one text frame; null for malformed input (logged and ignored). */
export function parseServerMessage(text: string): ServerMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const type = (obj as { type?: unknown }).type;
  if (type === "hello" || type === "overlay" || type === "events" || type === "event") {
    return obj as ServerMessage;
  }
  return null;
}

export function commandEnvelope(command: SessionCommand, seq: number): string {
  return JSON.stringify({ type: "command", seq, command });
}

export interface BaseFramePayload {
  index: number;
  png: Uint8Array;
}

/** Decode a binary frame: u32 LE index header + PNG bytes. */
export function parseBaseFrame(data: ArrayBuffer | Uint8Array): BaseFramePayload | null {
  const bytes = data instanceof Uint8Array ? data : new Uint8Array(data);
  if (bytes.byteLength < 4) return null;
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  return { index: view.getUint32(0, true), png: bytes.slice(4) };
}
