/**
 * Screen state as a pure reduction of server messages. The client never
 * computes effect results locally: the overlay layer is replaced verbatim by
 * whatever SVG the engine sends, so replaying the same messages reproduces
 * the identical view.
 */

import {
  BaseFramePayload,
  ServerEvent,
  ServerHello,
  parseBaseFrame,
  parseServerMessage,
} from "./protocol.js";

export interface Marker {
  trackerId: string;
  x: number;
  y: number;
}

export interface Toast {
  code: string;
  message: string;
}

export interface EffectEntry {
  id: string;
  kind: string;
}

export interface ScreenState {
  hello: ServerHello | null;
  frameIndex: number;
  overlaySvg: string;
  baseFrame: BaseFramePayload | null;
  markers: Marker[];
  toasts: Toast[];
  effects: EffectEntry[];
  elements: string[];
  mode: "paused" | "playing";
  endOfStream: boolean;
  malformed: number;
}

export function initialScreenState(): ScreenState {
  return {
    hello: null,
    frameIndex: 0,
    overlaySvg: "",
    baseFrame: null,
    markers: [],
    toasts: [],
    effects: [],
    elements: [],
    mode: "paused",
    endOfStream: false,
    malformed: 0,
  };
}

function applyEvent(state: ScreenState, ev: ServerEvent): ScreenState {
  switch (ev.kind) {
    case "track_point_confirmed": {
      const [x, y] = ev.position as [number, number];
      const marker = { trackerId: String(ev.tracker_id), x, y };
      return { ...state, markers: [...state.markers, marker] };
    }
    case "element_created":
      return { ...state, elements: [...state.elements, String(ev.element_id)] };
    case "effect_applied": {
      const entry = { id: String(ev.effect_id), kind: String(ev.effect_kind) };
      return { ...state, effects: [...state.effects, entry] };
    }
    case "paused":
      return { ...state, mode: "paused" };
    case "resumed":
      return { ...state, mode: "playing", endOfStream: false };
    case "undone":
      // the refreshed overlay that follows carries the reverted view
      return state;
    case "end_of_stream":
      return { ...state, mode: "paused", endOfStream: true };
    case "error": {
      const toast = { code: String(ev.code), message: String(ev.message ?? ev.code) };
      return { ...state, toasts: [...state.toasts, toast] };
    }
    case "frame":
      return { ...state, frameIndex: Number(ev.index) };
    default:
      return state;
  }
}

/** Fold one incoming websocket payload (text or binary) into the state. */
export function reduceIncoming(
  state: ScreenState,
  data: string | ArrayBuffer | Uint8Array,
): ScreenState {
  if (typeof data !== "string") {
    const frame = parseBaseFrame(data);
    if (frame === null) return { ...state, malformed: state.malformed + 1 };
    return { ...state, baseFrame: frame, frameIndex: frame.index };
  }
  const msg = parseServerMessage(data);
  if (msg === null) return { ...state, malformed: state.malformed + 1 };
  switch (msg.type) {
    case "hello":
      return { ...state, hello: msg, frameIndex: msg.frame, mode: msg.mode };
    case "overlay":
      return { ...state, overlaySvg: msg.svg, frameIndex: msg.frame };
    case "events":
      return msg.events.reduce(applyEvent, state);
    case "event":
      return applyEvent(state, msg.event);
  }
}
