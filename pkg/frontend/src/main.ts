/**
 * Browser wiring: canvas layers (base frame, server overlay, live stroke
 * preview, markers), the tool palette, parameter sliders, and play/pause.
 * Open with ?mirror=1 for the performer's read-only view; all animation
 * comes from server overlays.
 */

import { SessionClient } from "./client.js";
import { PointerPipeline, Tool } from "./commands.js";
import { DEFAULT_STYLE, EFFECT_KINDS, EffectKind, StrokeStyle } from "./protocol.js";
import { ScreenState } from "./state.js";
import { QueueingTransport, SocketLike } from "./transport.js";

function browserSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  ws.binaryType = "arraybuffer";
  return ws as unknown as SocketLike;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const params = new URLSearchParams(window.location.search);
const mirror = params.get("mirror") === "1";
const wsUrl = params.get("ws") ?? `ws://${window.location.hostname}:8765/session`;

const transport = new QueueingTransport(wsUrl, browserSocket, {
  queueTimeoutMs: 3000,
  onQueueTimeout: (n) => showToast("offline", `${n} commands waiting for the connection`),
});
const client = new SessionClient(transport, { readOnly: mirror });
const pipeline = new PointerPipeline();

let tool: Tool = { mode: "draw" };
let style: StrokeStyle = { ...DEFAULT_STYLE };
let selectedEffect: string | null = null;
let emitterLine: [number, number][] | null = null;
let motionPath: [number, number][] | null = null;
let capturing: "emitter" | "motion" | null = null;

const stage = el<HTMLDivElement>("stage");
const frameImg = el<HTMLImageElement>("frame");
const overlayHost = el<HTMLDivElement>("overlay");
const preview = el<HTMLCanvasElement>("preview");
const markerHost = el<HTMLDivElement>("markers");
const toastHost = el<HTMLDivElement>("toasts");
const effectSelect = el<HTMLSelectElement>("effect-select");
const statusLine = el<HTMLSpanElement>("status");

let lastFrameUrl: string | null = null;

function showToast(code: string, message: string): void {
  const node = document.createElement("div");
  node.className = "toast";
  node.textContent = `${code}: ${message}`;
  toastHost.appendChild(node);
  setTimeout(() => node.remove(), 4000);
}

let toastCount = 0;
let markerCount = 0;

function renderState(state: ScreenState): void {
  if (state.hello && !stage.dataset["sized"]) {
    const [w, h] = state.hello.frame_size;
    stage.style.width = `${w}px`;
    stage.style.height = `${h}px`;
    preview.width = w;
    preview.height = h;
    stage.dataset["sized"] = "1";
    if (state.hello.role === "observer") {
      document.body.classList.add("mirror");
    }
  }
  if (state.baseFrame) {
    const blob = new Blob([state.baseFrame.png as BlobPart], { type: "image/png" });
    const url = URL.createObjectURL(blob);
    frameImg.src = url;
    if (lastFrameUrl) URL.revokeObjectURL(lastFrameUrl);
    lastFrameUrl = url;
  }
  overlayHost.innerHTML = state.overlaySvg;
  while (markerCount < state.markers.length) {
    const m = state.markers[markerCount]!;
    const dot = document.createElement("div");
    dot.className = "marker";
    dot.style.left = `${m.x}px`;
    dot.style.top = `${m.y}px`;
    dot.title = m.trackerId;
    markerHost.appendChild(dot);
    markerCount += 1;
  }
  while (toastCount < state.toasts.length) {
    const t = state.toasts[toastCount]!;
    showToast(t.code, t.message);
    toastCount += 1;
  }
  while (effectSelect.options.length < state.effects.length) {
    const fx = state.effects[effectSelect.options.length]!;
    const opt = document.createElement("option");
    opt.value = fx.id;
    opt.textContent = `${fx.id} (${fx.kind})`;
    effectSelect.appendChild(opt);
    selectedEffect = fx.id;
    effectSelect.value = fx.id;
  }
  statusLine.textContent =
    `${state.mode} @ frame ${state.frameIndex}` + (state.endOfStream ? " (end of stream)" : "");
}

client.subscribe(renderState);

// -- pointer handling --------------------------------------------------------

const previewCtx = preview.getContext("2d")!;
let previewPts: [number, number][] = [];

function canvasPoint(ev: PointerEvent): [number, number] {
  const rect = stage.getBoundingClientRect();
  return [ev.clientX - rect.left, ev.clientY - rect.top];
}

function drawPreview(): void {
  previewCtx.clearRect(0, 0, preview.width, preview.height);
  const paths: { pts: [number, number][]; color: string }[] = [];
  if (previewPts.length > 1) {
    const [r, g, b, a] = style.color;
    paths.push({ pts: previewPts, color: `rgba(${r},${g},${b},${(a / 255) * style.opacity})` });
  }
  if (emitterLine && emitterLine.length > 1) paths.push({ pts: emitterLine, color: "rgba(0,128,255,0.8)" });
  if (motionPath && motionPath.length > 1) paths.push({ pts: motionPath, color: "rgba(255,128,0,0.8)" });
  for (const { pts, color } of paths) {
    previewCtx.strokeStyle = color;
    previewCtx.lineWidth = style.width;
    previewCtx.lineCap = "round";
    previewCtx.lineJoin = "round";
    previewCtx.beginPath();
    previewCtx.moveTo(pts[0]![0], pts[0]![1]);
    for (const [x, y] of pts.slice(1)) previewCtx.lineTo(x, y);
    previewCtx.stroke();
  }
}

stage.addEventListener("pointerdown", (ev) => {
  if (mirror) return;
  const [x, y] = canvasPoint(ev);
  stage.setPointerCapture(ev.pointerId);
  if (capturing) {
    const line: [number, number][] = [[x, y]];
    if (capturing === "emitter") emitterLine = line;
    else motionPath = line;
    return;
  }
  client.sendAll(pipeline.begin(tool, x, y, style));
  if (tool.mode === "draw") {
    previewPts = [[x, y]];
    drawPreview();
  }
});

stage.addEventListener("pointermove", (ev) => {
  if (mirror || ev.buttons === 0) return;
  const [x, y] = canvasPoint(ev);
  if (capturing) {
    (capturing === "emitter" ? emitterLine : motionPath)?.push([x, y]);
    drawPreview();
    return;
  }
  client.sendAll(pipeline.move(tool, x, y));
  if (tool.mode === "draw") {
    previewPts.push([x, y]);
    drawPreview();
  }
});

stage.addEventListener("pointerup", (ev) => {
  if (mirror) return;
  const [x, y] = canvasPoint(ev);
  if (capturing) {
    capturing = null;
    drawPreview();
    return;
  }
  client.sendAll(pipeline.end(tool, x, y));
  if (tool.mode === "draw") {
    previewPts = [];
    // keep the drawn ink visible until the server echoes the grouped element
  }
});

// -- palette -----------------------------------------------------------------

function setTool(next: Tool, label: string): void {
  tool = next;
  el<HTMLSpanElement>("tool-label").textContent = label;
}

el<HTMLButtonElement>("tool-draw").onclick = () => setTool({ mode: "draw" }, "draw");
el<HTMLButtonElement>("tool-color").onclick = () =>
  setTool({ mode: "select_point", pointKind: "color" }, "select color point");
el<HTMLButtonElement>("tool-keypoint").onclick = () =>
  setTool({ mode: "select_point", pointKind: "keypoint" }, "select body point");

el<HTMLButtonElement>("group").onclick = () => client.send({ kind: "group_element" });
el<HTMLButtonElement>("undo").onclick = () => client.send({ kind: "undo" });
el<HTMLButtonElement>("play").onclick = () => client.send({ kind: "resume_video" });
el<HTMLButtonElement>("pause").onclick = () => client.send({ kind: "pause_video" });
el<HTMLButtonElement>("flip-add").onclick = () => client.send({ kind: "add_flipbook_frame" });
el<HTMLButtonElement>("flip-save").onclick = () => client.send({ kind: "save_flipbook" });
el<HTMLButtonElement>("emitter").onclick = () => {
  capturing = "emitter";
  emitterLine = null;
};
el<HTMLButtonElement>("motion-path").onclick = () => {
  capturing = "motion";
  motionPath = null;
};

for (const kind of EFFECT_KINDS) {
  const btn = document.getElementById(`fx-${kind}`) as HTMLButtonElement | null;
  if (!btn) continue;
  btn.onclick = () => applyEffect(kind);
}

function applyEffect(kind: EffectKind): void {
  const cmd: { kind: "apply_effect"; effect_kind: EffectKind; params?: Record<string, unknown> } = {
    kind: "apply_effect",
    effect_kind: kind,
  };
  if (kind === "particles") {
    if (!emitterLine || emitterLine.length < 2) {
      showToast("particles-emitter", "draw an emitter line first (emitter button)");
      return;
    }
    cmd.params = { emitter_points: emitterLine };
    if (motionPath && motionPath.length >= 2) cmd.params["motion_path"] = motionPath;
    emitterLine = null;
    motionPath = null;
    drawPreview();
  }
  if (kind === "flipbook") {
    client.send({ kind: "save_flipbook" });
    return;
  }
  client.send(cmd);
}

effectSelect.onchange = () => {
  selectedEffect = effectSelect.value || null;
};

// -- style and parameter controls --------------------------------------------

function bindStyleInput(id: string, apply: (value: number) => void): void {
  const input = el<HTMLInputElement>(id);
  input.oninput = () => apply(Number(input.value));
}

bindStyleInput("stroke-width", (v) => (style.width = v));
bindStyleInput("stroke-opacity", (v) => (style.opacity = v));
el<HTMLInputElement>("stroke-color").oninput = () => {
  const hex = el<HTMLInputElement>("stroke-color").value;
  style.color = [
    parseInt(hex.slice(1, 3), 16),
    parseInt(hex.slice(3, 5), 16),
    parseInt(hex.slice(5, 7), 16),
    255,
  ];
};

function bindParamSlider(id: string, key: string, parse: (raw: string) => unknown): void {
  const input = el<HTMLInputElement>(id);
  input.oninput = () => {
    if (selectedEffect) client.setParam(selectedEffect, key, parse(input.value));
  };
}

bindParamSlider("param-threshold", "threshold", Number);
bindParamSlider("param-speed", "speed", Number);
bindParamSlider("param-fade", "fade", Number);
bindParamSlider("param-fps", "fps", Number);
el<HTMLButtonElement>("param-direction").onclick = () => {
  const btn = el<HTMLButtonElement>("param-direction");
  const next = btn.dataset["value"] === "decrease" ? "increase" : "decrease";
  btn.dataset["value"] = next;
  btn.textContent = `direction: ${next}`;
  if (selectedEffect) client.setParam(selectedEffect, "direction", next);
};

client.connect();
