"""Effect state machines: object binding, flip-book playback, distance
triggers, particle emitters, and motion trajectories.

Each step is a pure function from old state to new state. Randomness is drawn
from a generator seeded by (scene seed, effect id, frame index), so effects
never perturb each other and every run of the same scene is identical.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, replace
from typing import Optional

from .model import Diagnostic, EffectSpec, Point2

FLIPBOOK_DEFAULT_FPS = 8.0
TRAJECTORY_DEFAULT_CAP = 30
PARTICLE_DEFAULT_RATE = 10.0
PARTICLE_DEFAULT_SPEED = 60.0
PARTICLE_DEFAULT_LIFETIME = 2.0
# without a motion path, particles travel straight down (rain/snow look)
PARTICLE_DEFAULT_DIRECTION = (0.0, 1.0)


def rng_for(scene_seed: int, effect_id: str, frame_index: int) -> random.Random:
    """Deterministic per-effect, per-frame generator (platform independent)."""
    digest = hashlib.sha256(f"{scene_seed}/{effect_id}/{frame_index}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


# ---------------------------------------------------------------------------
# parameter records (serialized into EffectSpec.params)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BindingParams:
    """anchor_at_bind pins the tracker position the element was drawn against;
    when absent it is captured on the first engine step."""

    anchor_at_bind: Optional[Point2] = None

    def check(self, fx: EffectSpec) -> list[Diagnostic]:
        return []


@dataclass(frozen=True)
class FlipBookParams:
    fps: float = FLIPBOOK_DEFAULT_FPS
    anchor_at_bind: Optional[Point2] = None

    def check(self, fx: EffectSpec) -> list[Diagnostic]:
        if not (self.fps > 0):
            return [Diagnostic("flipbook-fps", fx.id, "fps must be > 0")]
        return []


@dataclass(frozen=True)
class TriggerParams:
    """Fires once when the tracked distance crosses the threshold in the
    chosen direction; the payload elements play through once, flip-book style."""

    threshold: float = 60.0
    direction: str = "decrease"  # or "increase"
    payload_fps: float = FLIPBOOK_DEFAULT_FPS
    payload_tracker_id: Optional[str] = None  # optional: payload follows this tracker after firing
    anchor_at_bind: Optional[Point2] = None

    def check(self, fx: EffectSpec) -> list[Diagnostic]:
        diags = []
        if not (self.threshold > 0):
            diags.append(Diagnostic("trigger-threshold", fx.id, "threshold must be > 0"))
        if self.direction not in ("decrease", "increase"):
            diags.append(Diagnostic("trigger-direction", fx.id, f"bad direction {self.direction!r}"))
        if not (self.payload_fps > 0):
            diags.append(Diagnostic("trigger-params", fx.id, "payload_fps must be > 0"))
        if self.payload_tracker_id is not None and self.payload_tracker_id not in fx.tracker_ids:
            diags.append(Diagnostic("trigger-params", fx.id, "payload_tracker_id must be one of tracker_ids"))
        return diags


@dataclass(frozen=True)
class ParticleParams:
    emitter_points: tuple[Point2, ...] = ()
    spawn_rate: float = PARTICLE_DEFAULT_RATE      # particles per second
    speed: float = PARTICLE_DEFAULT_SPEED          # pixels per second
    lifetime: float = PARTICLE_DEFAULT_LIFETIME    # seconds
    motion_path: Optional[tuple[Point2, ...]] = None
    direction: tuple[float, float] = PARTICLE_DEFAULT_DIRECTION
    loop_path: bool = False
    anchor_at_bind: Optional[Point2] = None

    def check(self, fx: EffectSpec) -> list[Diagnostic]:
        diags = []
        if len(self.emitter_points) < 2:
            diags.append(Diagnostic("particles-emitter", fx.id, "emitter needs at least 2 points"))
        if not (self.spawn_rate > 0 and self.speed > 0 and self.lifetime > 0):
            diags.append(Diagnostic("particles-params", fx.id, "spawn_rate, speed, lifetime must be > 0"))
        if self.motion_path is not None and len(self.motion_path) < 2:
            diags.append(Diagnostic("particles-params", fx.id, "motion_path needs at least 2 points"))
        return diags


@dataclass(frozen=True)
class TrajectoryParams:
    max_elements: int = TRAJECTORY_DEFAULT_CAP
    fade: float = 0.9        # opacity multiplier per step back from newest
    scale_step: float = 1.0  # scale multiplier per step back from newest
    stride: int = 1          # sample every n-th engine frame
    anchor_at_bind: Optional[Point2] = None

    def check(self, fx: EffectSpec) -> list[Diagnostic]:
        diags = []
        if self.max_elements < 1:
            diags.append(Diagnostic("trajectory-params", fx.id, "max_elements must be >= 1"))
        if not (0.0 < self.fade <= 1.0) or not (0.0 < self.scale_step <= 1.0):
            diags.append(Diagnostic("trajectory-params", fx.id, "fade and scale_step must be in (0,1]"))
        if self.stride < 1:
            diags.append(Diagnostic("trajectory-params", fx.id, "stride must be >= 1"))
        return diags


# ---------------------------------------------------------------------------
# runtime states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BindingState:
    anchor_at_bind: Point2


@dataclass(frozen=True)
class FlipBookState:
    start_frame: int = 0
    anchor_at_bind: Optional[Point2] = None


@dataclass(frozen=True)
class TriggerState:
    armed: bool = True
    playing: bool = False
    play_started_at: Optional[int] = None
    anchor_at_fire: Optional[Point2] = None


@dataclass(frozen=True)
class Particle:
    birth_frame: int
    origin: Point2
    progress: float = 0.0  # pixels traveled, nondecreasing


@dataclass(frozen=True)
class ParticlesState:
    particles: tuple[Particle, ...] = ()
    spawn_accumulator: float = 0.0
    anchor_at_bind: Optional[Point2] = None


@dataclass(frozen=True)
class TrajectoryState:
    clones: tuple[Point2, ...] = ()
    steps_seen: int = 0
    anchor_at_bind: Optional[Point2] = None


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def update_binding(state: BindingState, anchor_now: Point2) -> Point2:
    """Pure translation anchor_now - anchor_at_bind; history-free."""
    return anchor_now - state.anchor_at_bind


def flipbook_frame(frame_count: int, fps: float, t: float) -> int:
    """floor(t * fps) mod frame_count, for t seconds since the effect started."""
    if frame_count <= 0:
        raise ValueError("frame_count must be >= 1")
    return int(math.floor(t * fps)) % frame_count


def trigger_playback_done(state: TriggerState, payload_count: int, payload_fps: float,
                          frame: int, engine_fps: float) -> bool:
    if not state.playing or state.play_started_at is None:
        return True
    elapsed = (frame - state.play_started_at) / engine_fps
    return int(math.floor(elapsed * payload_fps)) >= payload_count


def evaluate_trigger(
    params: TriggerParams,
    state: TriggerState,
    distance: float,
    frame: int,
    payload_count: int,
    engine_fps: float,
) -> tuple[TriggerState, bool]:
    """One-shot distance trigger.

    Fires when armed and the distance crosses the threshold in the configured
    direction (strictly below for "decrease", strictly above for "increase").
    Firing disarms; re-arming needs both the payload to have finished playing
    and the distance to have released back past the threshold.
    """
    if params.direction == "decrease":
        fire_now = distance < params.threshold
        released = distance >= params.threshold
    else:
        fire_now = distance > params.threshold
        released = distance <= params.threshold

    if state.playing and trigger_playback_done(state, payload_count, params.payload_fps, frame, engine_fps):
        state = replace(state, playing=False, play_started_at=None, anchor_at_fire=None)

    if state.armed and fire_now:
        return replace(state, armed=False, playing=True, play_started_at=frame), True
    if not state.armed and not state.playing and released:
        return replace(state, armed=True), False
    return state, False


def _polyline_lengths(points: tuple[Point2, ...]) -> tuple[list[float], float]:
    cum = [0.0]
    for a, b in zip(points, points[1:]):
        cum.append(cum[-1] + math.hypot(b.x - a.x, b.y - a.y))
    return cum, cum[-1]


def point_at_arc_length(points: tuple[Point2, ...], s: float) -> Point2:
    """Point at distance s along the polyline, clamped to its ends."""
    cum, total = _polyline_lengths(points)
    if total == 0.0:
        return points[0]
    s = min(max(s, 0.0), total)
    for i in range(1, len(cum)):
        if s <= cum[i]:
            seg = cum[i] - cum[i - 1]
            t = 0.0 if seg == 0.0 else (s - cum[i - 1]) / seg
            a, b = points[i - 1], points[i]
            return Point2(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
    return points[-1]


def step_particles(
    params: ParticleParams,
    state: ParticlesState,
    emitter_world: tuple[Point2, ...],
    dt: float,
    rng: random.Random,
    frame_index: int,
) -> ParticlesState:
    """Advance, cull, then spawn.

    Spawning accumulates spawn_rate*dt fractionally across frames and emits
    the integer part, each at a uniformly random arc-length position on the
    emitter polyline. Particles die past their lifetime, or at the end of the
    motion path unless loop_path is set.
    """
    path = params.motion_path
    path_total = _polyline_lengths(path)[1] if path is not None else None

    alive: list[Particle] = []
    for p in state.particles:
        advanced = replace(p, progress=p.progress + params.speed * dt)
        age = (frame_index - advanced.birth_frame) * dt
        if age > params.lifetime:
            continue
        if path_total is not None and not params.loop_path and advanced.progress > path_total:
            continue
        alive.append(advanced)

    acc = state.spawn_accumulator + params.spawn_rate * dt
    n_new = int(math.floor(acc))
    acc -= n_new
    if n_new:
        _, emitter_total = _polyline_lengths(emitter_world)
        for _ in range(n_new):
            origin = point_at_arc_length(emitter_world, rng.random() * emitter_total)
            alive.append(Particle(birth_frame=frame_index, origin=origin, progress=0.0))

    return replace(state, particles=tuple(alive), spawn_accumulator=acc)


def particle_position(params: ParticleParams, p: Particle) -> Point2:
    """World position: origin plus travel along the motion path shape (or the
    default direction when no path was drawn)."""
    if params.motion_path is not None:
        path = params.motion_path
        _, total = _polyline_lengths(path)
        s = p.progress
        if params.loop_path and total > 0:
            s = s % total
        at = point_at_arc_length(path, s)
        return Point2(p.origin.x + at.x - path[0].x, p.origin.y + at.y - path[0].y)
    dx, dy = params.direction
    norm = math.hypot(dx, dy) or 1.0
    return Point2(p.origin.x + dx / norm * p.progress, p.origin.y + dy / norm * p.progress)


def update_trajectory(params: TrajectoryParams, clones: tuple[Point2, ...], anchor_now: Point2) -> tuple[Point2, ...]:
    """Append the current anchor; drop the oldest past max_elements."""
    clones = clones + (anchor_now,)
    if len(clones) > params.max_elements:
        clones = clones[len(clones) - params.max_elements:]
    return clones
