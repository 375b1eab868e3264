/**
 * Pointer-to-command translation. A drag in Draw mode becomes
 * BeginStroke / AppendPoints batches (at most 16 points each) / EndStroke;
 * a tap in SelectPoint mode becomes one SelectTrackPoint. Other modes
 * ignore pointer gestures entirely.
 */

import {
  APPEND_BATCH_LIMIT,
  DEFAULT_STYLE,
  EffectKind,
  PointKind,
  SessionCommand,
  StrokeStyle,
} from "./protocol.js";

export type Tool =
  | { mode: "draw" }
  | { mode: "select_point"; pointKind: PointKind }
  | { mode: "effect"; kind: EffectKind };

export class PointerPipeline {
  private buffer: [number, number][] = [];
  private drawing = false;
  private downAt: [number, number] | null = null;

  constructor(private readonly batchLimit: number = APPEND_BATCH_LIMIT) {}

  get strokeOpen(): boolean {
    return this.drawing;
  }

  /** Pointer down. */
  begin(tool: Tool, x: number, y: number, style: StrokeStyle = DEFAULT_STYLE): SessionCommand[] {
    this.downAt = [x, y];
    if (tool.mode !== "draw") return [];
    this.drawing = true;
    this.buffer = [[x, y]];
    return [{ kind: "begin_stroke", style }];
  }

  /** Pointer move while down. */
  move(tool: Tool, x: number, y: number): SessionCommand[] {
    if (tool.mode !== "draw" || !this.drawing) return [];
    this.buffer.push([x, y]);
    if (this.buffer.length >= this.batchLimit) {
      const points = this.buffer;
      this.buffer = [];
      return [{ kind: "append_points", points }];
    }
    return [];
  }

  /** Pointer up. */
  end(tool: Tool, x: number, y: number): SessionCommand[] {
    if (tool.mode === "select_point") {
      this.downAt = null;
      return [{ kind: "select_track_point", x, y, point_kind: tool.pointKind }];
    }
    if (tool.mode !== "draw" || !this.drawing) {
      this.downAt = null;
      return [];
    }
    this.drawing = false;
    this.downAt = null;
    const out: SessionCommand[] = [];
    if (this.buffer.length > 0) {
      out.push({ kind: "append_points", points: this.buffer });
      this.buffer = [];
    }
    out.push({ kind: "end_stroke" });
    return out;
  }

  /** Pointer left the canvas mid-gesture: close any open stroke. */
  cancel(tool: Tool): SessionCommand[] {
    if (tool.mode !== "draw" || !this.drawing) return [];
    this.drawing = false;
    const out: SessionCommand[] = [];
    if (this.buffer.length > 0) {
      out.push({ kind: "append_points", points: this.buffer });
      this.buffer = [];
    }
    out.push({ kind: "end_stroke" });
    return out;
  }
}
