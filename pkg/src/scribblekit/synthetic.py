"""Deterministic synthetic inputs: moving-blob frame streams, scripted pose
tracks, and ready-made scenes for benchmarks, demos, and end-to-end tests.

Everything here is a pure function of its arguments, so generated inputs can
be regenerated anywhere and compared byte for byte.
"""

from __future__ import annotations

import math

import numpy as np

from .contour import ContourParams
from .effects import (
    BindingParams,
    FlipBookParams,
    ParticleParams,
    TrajectoryParams,
    TriggerParams,
)
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
)
from .sceneio import PoseTrack, canonicalize_scene
from .tracking import POSE_KEYPOINT_COUNT, RIGHT_WRIST, Keypoint, PoseFrame
from .tracking import sample_color_window

BACKGROUND = (200, 200, 200)
BLOB_COLOR = (220, 60, 40)
SECOND_BLOB_COLOR = (40, 80, 220)


def blob_center(frame_index: int, size: tuple[int, int], phase: float = 0.0) -> Point2:
    """Scripted blob path: a slow ellipse around the frame center."""
    w, h = size
    angle = 2.0 * math.pi * (frame_index / 240.0) + phase
    return Point2(w / 2 + 0.3 * w * math.cos(angle), h / 2 + 0.25 * h * math.sin(angle))


def make_frame(
    size: tuple[int, int],
    centers: list[tuple[Point2, float, tuple[int, int, int]]],
) -> np.ndarray:
    """Gray frame with solid discs at the given (center, radius, color)."""
    w, h = size
    frame = np.empty((h, w, 3), dtype=np.uint8)
    frame[:, :] = BACKGROUND
    yy, xx = np.mgrid[0:h, 0:w]
    for center, radius, color in centers:
        disc = (xx - center.x) ** 2 + (yy - center.y) ** 2 <= radius**2
        frame[disc] = color
    return frame


def make_blob_frames(
    size: tuple[int, int],
    count: int,
    radius: float = 20.0,
    second_blob: bool = False,
) -> list[np.ndarray]:
    """Moving disc(s) over a uniform background; centers follow blob_center."""
    frames = []
    for i in range(count):
        centers = [(blob_center(i, size), radius, BLOB_COLOR)]
        if second_blob:
            centers.append((blob_center(i, size, phase=math.pi), radius, SECOND_BLOB_COLOR))
        frames.append(make_frame(size, centers))
    return frames


def wrist_position(frame_index: int, size: tuple[int, int]) -> Point2:
    """Scripted right-wrist path used by pose tracks and the demo service."""
    w, h = size
    angle = 2.0 * math.pi * (frame_index / 120.0)
    return Point2(w * 0.5 + w * 0.2 * math.cos(angle), h * 0.5 + h * 0.2 * math.sin(angle))


def make_pose_track(size: tuple[int, int], count: int, frame_rate: float = 60.0) -> PoseTrack:
    """A standing figure whose right wrist circles; other joints hold a fixed
    grid so every keypoint index resolves to a distinct position."""
    w, h = size
    frames = []
    for i in range(count):
        kps = []
        for k in range(POSE_KEYPOINT_COUNT):
            if k == RIGHT_WRIST:
                kps.append(Keypoint(wrist_position(i, size), True))
            else:
                col, row = k % 6, k // 6
                kps.append(Keypoint(Point2(w * 0.1 + col * w * 0.05, h * 0.1 + row * h * 0.08), True))
        frames.append(PoseFrame(tuple(kps)))
    return PoseTrack(frame_rate=frame_rate, frames=tuple(frames))


def _dot(eid: str, at: Point2, color=(20, 20, 160), width=4.0) -> SketchElement:
    pts = (Point2(at.x - 2, at.y), Point2(at.x + 2, at.y))
    return SketchElement(eid, (Stroke(pts, Style(color=(*color, 255), width=width)),), at)


def _zigzag(eid: str, at: Point2, size: float, color=(200, 40, 40)) -> SketchElement:
    pts = (
        Point2(at.x - size, at.y),
        Point2(at.x - size / 2, at.y - size),
        Point2(at.x, at.y),
        Point2(at.x + size / 2, at.y - size),
        Point2(at.x + size, at.y),
    )
    return SketchElement(eid, (Stroke(pts, Style(color=(*color, 255), width=3.0)),), at)


def _ring_element(eid: str, at: Point2, radius: float, n: int = 12, color=(30, 120, 30)) -> SketchElement:
    pts = tuple(
        Point2(at.x + radius * math.cos(2 * math.pi * k / n), at.y + radius * math.sin(2 * math.pi * k / n))
        for k in range(n + 1)
    )
    return SketchElement(eid, (Stroke(pts, Style(color=(*color, 255), width=3.0)),), at)


def make_full_scene(size: tuple[int, int] = (640, 480), seed: int = 7) -> Scene:
    """One color tracker, one keypoint tracker, and one effect of each of the
    six kinds, wired the way an authoring session would leave them."""
    w, h = size
    blob0 = blob_center(0, size)
    wrist0 = wrist_position(0, size)

    # color window exactly as sampling the blob pixel would produce it
    probe = make_frame(size, [(blob0, 20.0, BLOB_COLOR)])
    window = sample_color_window(probe, blob0)

    elements = (
        _zigzag("el-bound", Point2(blob0.x, blob0.y - 30), 14.0),
        _ring_element("el-flip-a", Point2(w * 0.2, h * 0.25), 10.0),
        _ring_element("el-flip-b", Point2(w * 0.2, h * 0.25), 16.0),
        _zigzag("el-payload", Point2(w * 0.7, h * 0.3), 10.0, color=(240, 160, 20)),
        _dot("el-particle", Point2(w * 0.5, h * 0.2), color=(60, 60, 200)),
        _dot("el-trail", wrist0, color=(160, 20, 160)),
    )
    trackers = (
        TrackerSpec("trk-blob", ColorBlobSpec(seed_point=blob0, window=window)),
        TrackerSpec("trk-wrist", KeypointSpec(index=RIGHT_WRIST)),
    )
    emitter = (Point2(w * 0.4, h * 0.15), Point2(w * 0.6, h * 0.15))
    effects = (
        EffectSpec("fx-bind", "binding", ("el-bound",), ("trk-blob",), BindingParams()),
        EffectSpec("fx-flip", "flipbook", ("el-flip-a", "el-flip-b"), (), FlipBookParams()),
        EffectSpec("fx-trig", "trigger", ("el-payload",), ("trk-blob", "trk-wrist"),
                   TriggerParams(threshold=120.0, direction="decrease")),
        EffectSpec("fx-rain", "particles", ("el-particle",), ("trk-blob",),
                   ParticleParams(emitter_points=emitter)),
        EffectSpec("fx-trail", "trajectory", ("el-trail",), ("trk-wrist",), TrajectoryParams()),
        EffectSpec("fx-contour", "contour", (), ("trk-blob",),
                   ContourParams(stroke=Style(color=(20, 180, 60, 255), width=2.0))),
    )
    scene = Scene(frame_size=size, elements=elements, trackers=trackers, effects=effects, seed=seed)
    return canonicalize_scene(scene)
