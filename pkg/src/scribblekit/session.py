"""Authoring session: applies commands (select, sketch, apply effect, undo)
to a scene, steps the engine over incoming frames, and resolves overlays.

Command application is deterministic: replaying the same command/step
transcript against the same frame and pose inputs reproduces the scene and
every overlay byte for byte. Commands never corrupt state; invalid ones
return Error events and leave everything untouched.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import sceneio, tracking
from .engine import Engine
from .model import (
    ColorBlobSpec,
    EffectSpec,
    KeypointSpec,
    Point2,
    Scene,
    SketchElement,
    Stroke,
    Style,
    TrackerSpec,
    validate_scene,
)
from .render import FrameOverlay
from .sceneio import canonicalize_scene, params_to_json, parse_effect_params
from .tracking import BinaryMask, PoseFrame, TrackingError

UNDO_LIMIT = 20

# trackers consumed from the tail of the selection, per effect kind
_TRACKER_TAKE = {"binding": 1, "flipbook": 1, "trigger": 2, "particles": 1, "trajectory": 1}


@dataclass(frozen=True)
class Event:
    kind: str
    data: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, **self.data}


def _error(code: str, message: str = "") -> Event:
    return Event("error", {"code": code, "message": message or code})


@dataclass
class SessionState:
    """Mutable authoring state around an Engine.

    mode gates frame stepping; in recorded sessions sketching requires
    Paused, in live sessions strokes may arrive at any time and take effect
    at the next frame.
    """

    engine: Engine
    live: bool = False
    mode: str = "paused"  # "paused" | "playing"
    current_frame: int = 0
    last_frame: Optional[np.ndarray] = None
    last_pose: Optional[PoseFrame] = None
    last_body_mask: Optional[BinaryMask] = None
    last_overlay: FrameOverlay = FrameOverlay(0)
    open_stroke: Optional[list[Point2]] = None
    open_style: Style = Style()
    stroke_buffer: list[Stroke] = field(default_factory=list)
    flipbook_buffer: list[str] = field(default_factory=list)
    selected_trackers: list[str] = field(default_factory=list)
    last_element: Optional[str] = None
    undo_stack: list[str] = field(default_factory=list)
    next_element_id: int = 1
    next_tracker_id: int = 1
    next_effect_id: int = 1

    @property
    def scene(self) -> Scene:
        return self.engine.scene


def new_session(scene: Scene | None = None, fps: float = 60.0, live: bool = False) -> SessionState:
    scene = scene if scene is not None else Scene()
    return SessionState(engine=Engine(scene, fps=fps), live=live)


def prime_frame(state: SessionState, frame: np.ndarray | None, pose: PoseFrame | None = None,
                body_mask: BinaryMask | None = None) -> None:
    """Make frame 0 visible to selection commands before any stepping."""
    state.last_frame = frame
    state.last_pose = pose
    state.last_body_mask = body_mask


def _push_undo(state: SessionState) -> None:
    state.undo_stack.append(sceneio.serialize_scene(state.scene))
    if len(state.undo_stack) > UNDO_LIMIT:
        state.undo_stack.pop(0)


def _commit_scene(state: SessionState, scene: Scene) -> None:
    """Swap in a new scene (already validated) and refresh the paused view."""
    _push_undo(state)
    state.engine.replace_scene(canonicalize_scene(scene), state.current_frame)
    state.last_overlay = state.engine.resolve(state.current_frame)


def _try_scene(state: SessionState, scene: Scene) -> Event | None:
    diags = validate_scene(scene)
    if diags:
        d = diags[0]
        return _error(d.rule, f"{d.subject}: {d.message}")
    return None


def _element_from_strokes(state: SessionState, strokes: list[Stroke]) -> SketchElement:
    eid = f"el-{state.next_element_id}"
    state.next_element_id += 1
    xs = [p.x for s in strokes for p in s.points]
    ys = [p.y for s in strokes for p in s.points]
    origin = Point2(sum(xs) / len(xs), sum(ys) / len(ys))
    return SketchElement(eid, tuple(strokes), origin)


def _select_track_point(state: SessionState, x: float, y: float, kind: str) -> list[Event]:
    tid = f"trk-{state.next_tracker_id}"
    if kind == "color":
        if state.last_frame is None:
            return [_error("no-frame", "no frame available to sample")]
        try:
            window = tracking.sample_color_window(state.last_frame, Point2(x, y))
        except TrackingError as exc:
            return [_error(exc.code, str(exc))]
        mask = tracking.segment_by_window(state.last_frame, window)
        centroid = tracking.largest_component_centroid(mask)
        if centroid is None:
            return [_error("no-blob", "no pixels matched the sampled window")]
        spec = TrackerSpec(tid, ColorBlobSpec(seed_point=Point2(x, y), window=window))
        position = centroid
    elif kind == "keypoint":
        if state.last_pose is None:
            return [_error("no-pose", "no pose frame available")]
        try:
            index = tracking.nearest_keypoint(state.last_pose, Point2(x, y))
        except TrackingError as exc:
            return [_error(exc.code, str(exc))]
        spec = TrackerSpec(tid, KeypointSpec(index=index))
        position = state.last_pose.keypoints[index].position
    else:
        return [_error("tracker-kind", f"unknown tracker kind {kind!r}")]

    candidate = state.scene.with_tracker(spec)
    err = _try_scene(state, candidate)
    if err:
        return [err]
    state.next_tracker_id += 1
    _commit_scene(state, candidate)
    # seed the runtime fix with the confirmed position
    state.engine.tracker_states[tid] = state.engine.tracker_states[tid]._with_fix(position)
    state.selected_trackers.append(tid)
    return [Event("track_point_confirmed",
                  {"tracker_id": tid, "position": [position.x, position.y]})]


def _apply_effect(state: SessionState, cmd: dict) -> list[Event]:
    kind = cmd.get("effect_kind")
    if kind not in ("binding", "flipbook", "trigger", "particles", "trajectory", "contour"):
        return [_error("effect-kind", f"unknown effect kind {kind!r}")]

    params_obj = dict(cmd.get("params") or {})
    element_ids = cmd.get("element_ids")
    if element_ids is None:
        element_ids = [] if kind == "contour" else ([state.last_element] if state.last_element else [])
        if kind != "contour" and not element_ids:
            return [_error("no-element", "sketch and group an element first")]
    tracker_ids = cmd.get("tracker_ids")
    if tracker_ids is None:
        if kind == "contour":
            source = params_obj.get("source", "tracker")
            tracker_ids = state.selected_trackers[-1:] if source == "tracker" else []
        else:
            take = _TRACKER_TAKE[kind]
            tracker_ids = state.selected_trackers[-take:]
            if kind == "flipbook" and not tracker_ids:
                tracker_ids = []

    try:
        params = parse_effect_params(kind, params_obj, "params")
    except sceneio.SceneIOError as exc:
        return [_error(exc.code, str(exc))]

    # pin the bind anchor to the driving tracker's current position
    if tracker_ids and hasattr(params, "anchor_at_bind") and params.anchor_at_bind is None:
        anchor_state = state.engine.tracker_states.get(tracker_ids[0])
        if anchor_state is not None:
            params = dataclasses.replace(params, anchor_at_bind=anchor_state.last_position)

    fid = f"fx-{state.next_effect_id}"
    spec = EffectSpec(fid, kind, tuple(element_ids), tuple(tracker_ids), params)
    candidate = state.scene.with_effect(spec)
    err = _try_scene(state, candidate)
    if err:
        return [err]
    state.next_effect_id += 1
    _commit_scene(state, candidate)
    return [Event("effect_applied", {"effect_id": fid, "effect_kind": kind})]


def _set_param(state: SessionState, effect_id: str, key: str, value) -> list[Event]:
    try:
        fx = state.scene.effect(effect_id)
    except KeyError:
        return [_error("unknown-effect", f"no effect {effect_id!r}")]
    params_obj = params_to_json(fx.kind, fx.params)
    if key not in params_obj:
        return [_error("unknown-param", f"{fx.kind} has no parameter {key!r}")]
    params_obj[key] = value
    try:
        params = parse_effect_params(fx.kind, params_obj, "params")
    except sceneio.SceneIOError as exc:
        return [_error(exc.code, str(exc))]
    new_fx = dataclasses.replace(fx, params=params)
    candidate = dataclasses.replace(
        state.scene, effects=tuple(new_fx if f.id == effect_id else f for f in state.scene.effects)
    )
    err = _try_scene(state, candidate)
    if err:
        return [err]
    _commit_scene(state, candidate)
    return [Event("param_set", {"effect_id": effect_id, "key": key})]


def apply_command(state: SessionState, cmd: dict) -> list[Event]:
    """Apply one authoring command; mutate state and return resulting events.

    Commands are plain dicts with a "kind" field (the same shape travels over
    the wire and in replay transcripts).
    """
    kind = cmd.get("kind")

    if kind == "pause_video":
        state.mode = "paused"
        return [Event("paused", {"frame": state.current_frame})]
    if kind == "resume_video":
        state.mode = "playing"
        return [Event("resumed", {"frame": state.current_frame})]

    stroke_commands = ("begin_stroke", "append_points", "end_stroke")
    if kind in stroke_commands and not state.live and state.mode != "paused":
        return [_error("not-paused", "pause the video to sketch in recorded mode")]

    if kind == "select_track_point":
        try:
            x, y = float(cmd["x"]), float(cmd["y"])
        except (KeyError, TypeError, ValueError):
            return [_error("schema(select)", "x and y must be numbers")]
        return _select_track_point(state, x, y, cmd.get("point_kind", "color"))

    if kind == "begin_stroke":
        if state.open_stroke is not None:
            return [_error("stroke-open", "a stroke is already open")]
        style_obj = cmd.get("style")
        try:
            style = sceneio.parse_style(style_obj, "style") if style_obj else Style()
        except sceneio.SceneIOError as exc:
            return [_error(exc.code, str(exc))]
        state.open_stroke = []
        state.open_style = style
        return []

    if kind == "append_points":
        if state.open_stroke is None:
            return [_error("no-open-stroke", "begin a stroke first")]
        try:
            pts = [Point2(float(x), float(y)) for x, y in (cmd.get("points") or [])]
        except (TypeError, ValueError):
            return [_error("schema(points)", "points must be [x, y] pairs")]
        state.open_stroke.extend(pts)
        return []

    if kind == "end_stroke":
        if state.open_stroke is None:
            return [_error("no-open-stroke", "begin a stroke first")]
        pts = state.open_stroke
        state.open_stroke = None
        if not pts:
            return [_error("empty-stroke", "stroke has no points")]
        if len(pts) == 1:
            pts = pts + pts  # a tap still yields a drawable dot
        state.stroke_buffer.append(Stroke(tuple(pts), state.open_style))
        return []

    if kind == "group_element":
        if not state.stroke_buffer:
            return [_error("empty-group", "no finished strokes to group")]
        el = _element_from_strokes(state, state.stroke_buffer)
        candidate = state.scene.with_element(el)
        err = _try_scene(state, candidate)
        if err:
            # the buffered strokes themselves are invalid; drop them so the
            # next gesture starts clean
            state.next_element_id -= 1
            state.stroke_buffer = []
            return [err]
        state.stroke_buffer = []
        _commit_scene(state, candidate)
        state.last_element = el.id
        return [Event("element_created", {"element_id": el.id})]

    if kind == "apply_effect":
        return _apply_effect(state, cmd)

    if kind == "set_param":
        if "effect_id" not in cmd or "key" not in cmd:
            return [_error("schema(set_param)", "effect_id and key are required")]
        return _set_param(state, str(cmd["effect_id"]), str(cmd["key"]), cmd.get("value"))

    if kind == "add_flipbook_frame":
        if not state.stroke_buffer:
            return [_error("empty-group", "draw the frame before adding it")]
        el = _element_from_strokes(state, state.stroke_buffer)
        candidate = state.scene.with_element(el)
        err = _try_scene(state, candidate)
        if err:
            state.next_element_id -= 1
            state.stroke_buffer = []
            return [err]
        state.stroke_buffer = []
        _commit_scene(state, candidate)
        state.flipbook_buffer.append(el.id)
        return [Event("element_created", {"element_id": el.id, "flipbook_frame": len(state.flipbook_buffer) - 1})]

    if kind == "save_flipbook":
        if not state.flipbook_buffer:
            return [_error("empty-flipbook", "add at least one frame first")]
        events = _apply_effect(state, {
            "effect_kind": "flipbook",
            "element_ids": list(state.flipbook_buffer),
            "params": cmd.get("params") or {},
        })
        if events and events[0].kind != "error":
            state.flipbook_buffer = []
        return events

    if kind == "undo":
        if not state.undo_stack:
            return [_error("nothing-to-undo")]
        snapshot = state.undo_stack.pop()
        scene = sceneio.parse_scene(snapshot)
        state.engine.replace_scene(scene, state.current_frame)
        state.last_overlay = state.engine.resolve(state.current_frame)
        state.selected_trackers = [t for t in state.selected_trackers
                                   if any(tr.id == t for tr in scene.trackers)]
        if state.last_element is not None and not any(el.id == state.last_element for el in scene.elements):
            state.last_element = None
        state.flipbook_buffer = [e for e in state.flipbook_buffer
                                 if any(el.id == e for el in scene.elements)]
        return [Event("undone", {})]

    return [_error("unknown-command", f"unknown command kind {kind!r}")]


def step_session(
    state: SessionState,
    frame: np.ndarray | None,
    pose: PoseFrame | None = None,
    body_mask: BinaryMask | None = None,
) -> tuple[FrameOverlay, list[Event]]:
    """Advance one frame while playing; a paused session is a no-op that
    returns the last overlay. A None frame means the source is exhausted."""
    if state.mode != "playing":
        return state.last_overlay, []
    if frame is None:
        state.mode = "paused"
        return state.last_overlay, [Event("end_of_stream", {"frame": state.current_frame})]

    state.current_frame += 1
    state.last_frame = frame
    state.last_pose = pose
    state.last_body_mask = body_mask
    overlay = state.engine.step(state.current_frame, frame=frame, pose=pose, body_mask=body_mask)
    state.last_overlay = overlay
    return overlay, [Event("frame", {"index": state.current_frame})]


def replay_transcript(
    entries: list[dict],
    frames: list[np.ndarray],
    pose_frames: list[PoseFrame] | None = None,
    fps: float = 60.0,
    live: bool = False,
    scene: Scene | None = None,
) -> tuple[Scene, list[FrameOverlay], list[Event]]:
    """Re-run a recorded session: entries are {"command": {...}} or {"step": true}.

    Frame i of the source feeds step i+1 (frame 0 is primed before the first
    command). Returns the final scene, every resolved overlay, and all events.
    """
    state = new_session(scene, fps=fps, live=live)
    pose0 = pose_frames[0] if pose_frames else None
    prime_frame(state, frames[0] if frames else None, pose0)
    overlay0 = state.engine.step(0, frame=state.last_frame, pose=pose0)
    state.last_overlay = overlay0

    overlays = [overlay0]
    events: list[Event] = []
    for entry in entries:
        if "command" in entry:
            events.extend(apply_command(state, entry["command"]))
            overlays.append(state.last_overlay)
        elif "step" in entry:
            nxt = state.current_frame + 1
            frame = frames[nxt] if nxt < len(frames) else None
            pose = pose_frames[nxt] if pose_frames and nxt < len(pose_frames) else None
            overlay, evs = step_session(state, frame, pose)
            overlays.append(overlay)
            events.extend(evs)
    return state.scene, overlays, events
