"""Frame-by-frame orchestration: update trackers, step effect state machines,
resolve the overlay.

The engine owns all runtime state for one scene. Stepping the same scene over
the same frame and pose inputs always produces identical overlays; randomness
comes only from (scene seed, effect id, frame index).
"""

from __future__ import annotations

import time
from dataclasses import replace

import numpy as np

from . import contour as contour_mod
from . import effects as fx_mod
from . import render, tracking
from .contour import ContourParams
from .model import ColorBlobSpec, KeypointSpec, Point2, Scene, ScribbleError, validate_scene
from .render import ContourState, FrameOverlay
from .tracking import BinaryMask, PoseFrame, TrackerState

DEFAULT_FPS = 60.0


class EngineError(ScribbleError):
    pass


def _initial_tracker_state(spec) -> TrackerState:
    if isinstance(spec.kind, ColorBlobSpec):
        return TrackerState(spec.id, spec.kind.seed_point)
    return TrackerState(spec.id, Point2(0.0, 0.0))


def _initial_effect_state(fx, frame_index: int):
    if fx.kind == "binding":
        anchor = fx.params.anchor_at_bind or Point2(0.0, 0.0)
        return fx_mod.BindingState(anchor_at_bind=anchor)
    if fx.kind == "flipbook":
        return fx_mod.FlipBookState(start_frame=frame_index, anchor_at_bind=fx.params.anchor_at_bind)
    if fx.kind == "trigger":
        return fx_mod.TriggerState()
    if fx.kind == "particles":
        return fx_mod.ParticlesState(anchor_at_bind=fx.params.anchor_at_bind)
    if fx.kind == "trajectory":
        return fx_mod.TrajectoryState(anchor_at_bind=fx.params.anchor_at_bind)
    if fx.kind == "contour":
        return ContourState()
    raise EngineError("effect-kind", fx.kind)


class Engine:
    """Holds tracker and effect runtime state and advances it one frame at a
    time. Construction validates the scene and rejects invalid ones."""

    def __init__(self, scene: Scene, fps: float = DEFAULT_FPS):
        diags = validate_scene(scene)
        if diags:
            raise EngineError("invalid-scene", "; ".join(f"{d.rule}({d.subject})" for d in diags))
        self.scene = scene
        self.fps = fps
        self.dt = 1.0 / fps
        self.tracker_states: dict[str, TrackerState] = {}
        self.effect_states: dict[str, object] = {}
        self._pending_capture: set[str] = set()
        self.sync_states(frame_index=0)

    def replace_scene(self, scene: Scene, frame_index: int) -> None:
        """Swap in an edited scene (authoring sessions), keeping the runtime
        state of everything that survived the edit."""
        self.scene = scene
        self.sync_states(frame_index)

    def sync_states(self, frame_index: int) -> None:
        for tr in self.scene.trackers:
            if tr.id not in self.tracker_states:
                self.tracker_states[tr.id] = _initial_tracker_state(tr)
        for fx in self.scene.effects:
            if fx.id not in self.effect_states:
                self.effect_states[fx.id] = _initial_effect_state(fx, frame_index)
                if fx.kind != "contour" and getattr(fx.params, "anchor_at_bind", None) is None:
                    self._pending_capture.add(fx.id)
        tracker_ids = {tr.id for tr in self.scene.trackers}
        effect_ids = {fx.id for fx in self.scene.effects}
        for tid in list(self.tracker_states):
            if tid not in tracker_ids:
                del self.tracker_states[tid]
        for fid in list(self.effect_states):
            if fid not in effect_ids:
                self.effect_states.pop(fid)
                self._pending_capture.discard(fid)

    # -- per-frame pipeline -------------------------------------------------

    def _update_trackers(self, frame: np.ndarray | None, pose: PoseFrame | None) -> dict[str, BinaryMask]:
        masks: dict[str, BinaryMask] = {}
        for tr in self.scene.trackers:
            state = self.tracker_states[tr.id]
            if isinstance(tr.kind, ColorBlobSpec):
                if frame is None:
                    self.tracker_states[tr.id] = state._with_miss()
                else:
                    new_state, mask = tracking.track_color_with_mask(frame, state, tr.kind.window)
                    self.tracker_states[tr.id] = new_state
                    masks[tr.id] = mask
            else:
                self.tracker_states[tr.id] = tracking.track_keypoint(pose, state, tr.kind.index)
        return masks

    def _capture_anchors(self) -> None:
        """First-step anchor capture for effects authored without an explicit
        bind position."""
        if not self._pending_capture:
            return
        for fx in self.scene.effects:
            if fx.id not in self._pending_capture:
                continue
            anchor = None
            if fx.tracker_ids:
                anchor = self.tracker_states[fx.tracker_ids[0]].last_position
            state = self.effect_states[fx.id]
            if fx.kind == "binding":
                self.effect_states[fx.id] = replace(state, anchor_at_bind=anchor or Point2(0.0, 0.0))
            elif fx.kind in ("flipbook", "particles", "trajectory"):
                self.effect_states[fx.id] = replace(state, anchor_at_bind=anchor)
        self._pending_capture.clear()

    def _step_effect(self, fx, frame_index: int, masks: dict[str, BinaryMask],
                     body_mask: BinaryMask | None) -> None:
        state = self.effect_states[fx.id]
        if fx.kind == "trigger":
            a = self.tracker_states[fx.tracker_ids[0]]
            b = self.tracker_states[fx.tracker_ids[1]]
            distance = tracking.pair_distance(a, b)
            new_state, fired = fx_mod.evaluate_trigger(
                fx.params, state, distance, frame_index, len(fx.element_ids), self.fps
            )
            if fired and fx.params.payload_tracker_id is not None:
                anchor = self.tracker_states[fx.params.payload_tracker_id].last_position
                new_state = replace(new_state, anchor_at_fire=anchor)
            self.effect_states[fx.id] = new_state
        elif fx.kind == "particles":
            delta = Point2(0.0, 0.0)
            anchor_now = self.tracker_states[fx.tracker_ids[0]].last_position
            if state.anchor_at_bind is not None:
                delta = anchor_now - state.anchor_at_bind
            emitter_world = tuple(p + delta for p in fx.params.emitter_points)
            rng = fx_mod.rng_for(self.scene.seed, fx.id, frame_index)
            self.effect_states[fx.id] = replace(
                fx_mod.step_particles(fx.params, state, emitter_world, self.dt, rng, frame_index),
                anchor_at_bind=state.anchor_at_bind,
            )
        elif fx.kind == "trajectory":
            if state.steps_seen % fx.params.stride == 0:
                anchor_now = self.tracker_states[fx.tracker_ids[0]].last_position
                clones = fx_mod.update_trajectory(fx.params, state.clones, anchor_now)
            else:
                clones = state.clones
            self.effect_states[fx.id] = replace(state, clones=clones, steps_seen=state.steps_seen + 1)
        elif fx.kind == "contour":
            params: ContourParams = fx.params
            mask = body_mask if params.source == "body-mask" else masks.get(fx.tracker_ids[0])
            ring = fill = None
            if mask is not None and mask.count() > 0:
                raw = contour_mod.extract_outer_contour(mask, frame_index)
                ring = contour_mod.simplify_polyline(raw, params.epsilon)
                if params.fill is not None:
                    fill = contour_mod.fill_region(mask, params.fill, frame_index)
            state.ring = ring
            state.fill = fill
        # binding and flipbook carry no per-frame state beyond the anchor

    def step(
        self,
        frame_index: int,
        frame: np.ndarray | None = None,
        pose: PoseFrame | None = None,
        body_mask: BinaryMask | None = None,
        timings: dict[str, float] | None = None,
    ) -> FrameOverlay:
        """Advance every tracker and effect to frame_index and resolve the
        overlay. timings, when given, accumulates seconds per pipeline stage."""
        t0 = time.perf_counter()
        masks = self._update_trackers(frame, pose)
        self._capture_anchors()
        t1 = time.perf_counter()
        if timings is not None:
            timings["tracking"] = timings.get("tracking", 0.0) + (t1 - t0)
        for fx in self.scene.effects:
            ts = time.perf_counter()
            self._step_effect(fx, frame_index, masks, body_mask)
            if timings is not None:
                te = time.perf_counter()
                timings[fx.kind] = timings.get(fx.kind, 0.0) + (te - ts)
        tr = time.perf_counter()
        overlay = self.resolve(frame_index)
        if timings is not None:
            timings["resolve"] = timings.get("resolve", 0.0) + (time.perf_counter() - tr)
        return overlay

    def resolve(self, frame_index: int) -> FrameOverlay:
        """Overlay for the current state without advancing anything."""
        return render.resolve_frame(
            self.scene, self.tracker_states, self.effect_states, frame_index, self.fps
        )
