"""Scene document model: geometry primitives, sketched elements, tracker and
effect declarations, and scene validation.

Coordinates are pixels in the source frame's space: origin top-left, y grows
downward. A Scene is an immutable value; edits produce a new Scene.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

EFFECT_KINDS = ("binding", "flipbook", "trigger", "particles", "trajectory", "contour")

# RGBA, integer channels in [0, 255]
Color = tuple[int, int, int, int]


class ScribbleError(Exception):
    """Base error with a stable machine-readable code."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(message or code)


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __add__(self, other: "Point2") -> "Point2":
        return Point2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point2") -> "Point2":
        return Point2(self.x - other.x, self.y - other.y)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


ORIGIN = Point2(0.0, 0.0)


@dataclass(frozen=True)
class Style:
    """Stroke appearance: RGBA color, width in pixels, opacity in [0, 1]."""

    color: Color = (30, 30, 30, 255)
    width: float = 3.0
    opacity: float = 1.0


@dataclass(frozen=True)
class Stroke:
    points: tuple[Point2, ...]
    style: Style = Style()


@dataclass(frozen=True)
class SketchElement:
    """A drawable group of freehand strokes.

    local_origin is the element's reference point: clone-producing effects
    place an element instance by mapping local_origin onto a target position.
    """

    id: str
    strokes: tuple[Stroke, ...]
    local_origin: Point2 = ORIGIN


@dataclass(frozen=True)
class ColorWindow:
    """Inclusive per-channel RGB bounds used to segment a tracked blob.

    Built from a sampled pixel as channel +/- 10, clamped to [0, 255].
    """

    r_lo: int
    r_hi: int
    g_lo: int
    g_hi: int
    b_lo: int
    b_hi: int

    def bounds(self) -> tuple[tuple[int, int], tuple[int, int], tuple[int, int]]:
        return ((self.r_lo, self.r_hi), (self.g_lo, self.g_hi), (self.b_lo, self.b_hi))


@dataclass(frozen=True)
class ColorBlobSpec:
    """Track the centroid of the largest blob matching a color window."""

    seed_point: Point2
    window: ColorWindow


@dataclass(frozen=True)
class KeypointSpec:
    """Track one of the 33 skeleton keypoints by index."""

    index: int


TrackerKind = Union[ColorBlobSpec, KeypointSpec]


@dataclass(frozen=True)
class TrackerSpec:
    id: str
    kind: TrackerKind


@dataclass(frozen=True)
class EffectSpec:
    """Binds sketch elements to trackers under one of the six effect kinds.

    element_ids doubles as the ordered frame list for flip-books and as the
    payload list for triggers; params is the kind-specific record defined in
    the effects / contour modules.
    """

    id: str
    kind: str
    element_ids: tuple[str, ...] = ()
    tracker_ids: tuple[str, ...] = ()
    params: object = None


@dataclass(frozen=True)
class Scene:
    frame_size: tuple[int, int] = (640, 480)
    elements: tuple[SketchElement, ...] = ()
    trackers: tuple[TrackerSpec, ...] = ()
    effects: tuple[EffectSpec, ...] = ()
    seed: int = 0

    def element(self, element_id: str) -> SketchElement:
        for el in self.elements:
            if el.id == element_id:
                return el
        raise KeyError(element_id)

    def tracker(self, tracker_id: str) -> TrackerSpec:
        for tr in self.trackers:
            if tr.id == tracker_id:
                return tr
        raise KeyError(tracker_id)

    def effect(self, effect_id: str) -> EffectSpec:
        for fx in self.effects:
            if fx.id == effect_id:
                return fx
        raise KeyError(effect_id)

    def with_element(self, el: SketchElement) -> "Scene":
        return replace(self, elements=self.elements + (el,))

    def with_tracker(self, tr: TrackerSpec) -> "Scene":
        return replace(self, trackers=self.trackers + (tr,))

    def with_effect(self, fx: EffectSpec) -> "Scene":
        return replace(self, effects=self.effects + (fx,))


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding: the violated rule and the offending id."""

    rule: str
    subject: str
    message: str = ""


def _check_color(diags: list[Diagnostic], color: object, subject: str, rule: str) -> None:
    ok = (
        isinstance(color, tuple)
        and len(color) == 4
        and all(isinstance(c, int) and 0 <= c <= 255 for c in color)
    )
    if not ok:
        diags.append(Diagnostic(rule, subject, f"color must be 4 ints in [0,255], got {color!r}"))


def _validate_element(el: SketchElement, diags: list[Diagnostic]) -> None:
    if not el.strokes:
        diags.append(Diagnostic("element-empty", el.id, "element has no strokes"))
    if not el.local_origin.is_finite():
        diags.append(Diagnostic("nonfinite-point", el.id, "local_origin not finite"))
    for i, stroke in enumerate(el.strokes):
        where = f"{el.id}/stroke[{i}]"
        if len(stroke.points) < 2:
            diags.append(Diagnostic("stroke-points", where, "stroke needs at least 2 points"))
        if any(not p.is_finite() for p in stroke.points):
            diags.append(Diagnostic("nonfinite-point", where, "stroke contains non-finite point"))
        if not (stroke.style.width > 0):
            diags.append(Diagnostic("stroke-width", where, "width must be > 0"))
        if not (0.0 <= stroke.style.opacity <= 1.0):
            diags.append(Diagnostic("stroke-opacity", where, "opacity must be in [0,1]"))
        _check_color(diags, stroke.style.color, where, "stroke-color")


def _validate_tracker(tr: TrackerSpec, frame_size: tuple[int, int], diags: list[Diagnostic]) -> None:
    width, height = frame_size
    if isinstance(tr.kind, KeypointSpec):
        if not (0 <= tr.kind.index <= 32):
            diags.append(Diagnostic("keypoint-index", tr.id, f"index {tr.kind.index} outside [0,32]"))
    elif isinstance(tr.kind, ColorBlobSpec):
        p = tr.kind.seed_point
        if not p.is_finite():
            diags.append(Diagnostic("nonfinite-point", tr.id, "seed_point not finite"))
        elif not (0 <= p.x < width and 0 <= p.y < height):
            diags.append(Diagnostic("seed-bounds", tr.id, f"seed_point {p} outside frame"))
        w = tr.kind.window
        for lo, hi in w.bounds():
            if not (isinstance(lo, int) and isinstance(hi, int) and 0 <= lo <= hi <= 255):
                diags.append(Diagnostic("color-window", tr.id, f"bad channel bounds [{lo},{hi}]"))
                break
    else:
        diags.append(Diagnostic("tracker-kind", tr.id, f"unknown tracker kind {tr.kind!r}"))


# (required trackers, required elements); None means unconstrained
_EFFECT_ARITY: dict[str, tuple[object, object]] = {
    "binding": (1, None),
    "flipbook": ((0, 1), None),
    "trigger": (2, None),
    "particles": (1, 1),
    "trajectory": (1, 1),
    "contour": ((0, 1), 0),
}


def _validate_effect(fx: EffectSpec, scene: Scene, diags: list[Diagnostic]) -> None:
    # deferred import: param records live with their effect implementations
    from . import contour as contour_mod
    from . import effects as effects_mod

    if fx.kind not in EFFECT_KINDS:
        diags.append(Diagnostic("effect-kind", fx.id, f"unknown kind {fx.kind!r}"))
        return

    element_ids = {el.id for el in scene.elements}
    tracker_ids = {tr.id for tr in scene.trackers}
    for eid in fx.element_ids:
        if eid not in element_ids:
            diags.append(Diagnostic("dangling-element", fx.id, f"element {eid!r} not in scene"))
    for tid in fx.tracker_ids:
        if tid not in tracker_ids:
            diags.append(Diagnostic("dangling-tracker", fx.id, f"tracker {tid!r} not in scene"))

    tr_rule, el_rule = _EFFECT_ARITY[fx.kind]

    def _arity_ok(rule: object, count: int) -> bool:
        if rule is None:
            return True
        if isinstance(rule, tuple):
            return count in rule
        return count == rule

    if not _arity_ok(tr_rule, len(fx.tracker_ids)):
        diags.append(
            Diagnostic(f"{fx.kind}-arity", fx.id, f"needs {tr_rule} tracker(s), got {len(fx.tracker_ids)}")
        )
    if not _arity_ok(el_rule, len(fx.element_ids)):
        diags.append(
            Diagnostic(f"{fx.kind}-arity", fx.id, f"needs {el_rule} element(s), got {len(fx.element_ids)}")
        )
    if fx.kind != "contour" and not fx.element_ids and el_rule is None:
        diags.append(Diagnostic(f"{fx.kind}-arity", fx.id, "needs at least 1 element"))

    expected = {
        "binding": effects_mod.BindingParams,
        "flipbook": effects_mod.FlipBookParams,
        "trigger": effects_mod.TriggerParams,
        "particles": effects_mod.ParticleParams,
        "trajectory": effects_mod.TrajectoryParams,
        "contour": contour_mod.ContourParams,
    }[fx.kind]
    if not isinstance(fx.params, expected):
        diags.append(Diagnostic("params-kind", fx.id, f"params must be {expected.__name__}"))
        return
    for diag in fx.params.check(fx):
        diags.append(diag)


def validate_scene(scene: Scene) -> list[Diagnostic]:
    """Check every scene invariant; an empty list means the scene is valid.

    Pure: the same scene always yields the same diagnostics.
    """
    diags: list[Diagnostic] = []
    width, height = scene.frame_size
    if not (isinstance(width, int) and isinstance(height, int) and width > 0 and height > 0):
        diags.append(Diagnostic("frame-size", "", f"frame_size must be positive ints, got {scene.frame_size!r}"))
        return diags
    if not (isinstance(scene.seed, int) and scene.seed >= 0):
        diags.append(Diagnostic("seed-range", "", "seed must be a non-negative integer"))

    seen: set[str] = set()
    for obj_id in [el.id for el in scene.elements] + [tr.id for tr in scene.trackers] + [
        fx.id for fx in scene.effects
    ]:
        if obj_id in seen:
            diags.append(Diagnostic("duplicate-id", obj_id, "ids must be globally unique"))
        seen.add(obj_id)

    for el in scene.elements:
        _validate_element(el, diags)
    for tr in scene.trackers:
        _validate_tracker(tr, scene.frame_size, diags)
    for fx in scene.effects:
        _validate_effect(fx, scene, diags)
    return diags
