"""Per-frame tracker updates: color-blob segmentation and centroids, skeleton
keypoint lookup, and the pairwise distance signal that drives triggers.

Frames are numpy arrays of shape (height, width, 3), dtype uint8, RGB order.
All operations are pure; track updates return a new TrackerState.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .model import ColorWindow, Point2, ScribbleError

COLOR_TOLERANCE = 10          # sampled channel +/- this, clamped to [0, 255]
POSE_KEYPOINT_COUNT = 33
HISTORY_LIMIT = 120           # positions kept per tracker (2 s at 60 fps)
DEFAULT_LOST_WARN_FRAMES = 30  # UI may warn once lost_for exceeds this

# Indices follow the common 33-point body topology (nose=0 ... right_foot_index=32).
LEFT_WRIST, RIGHT_WRIST = 15, 16
LEFT_ANKLE, RIGHT_ANKLE = 27, 28


class TrackingError(ScribbleError):
    pass


@dataclass(frozen=True)
class BinaryMask:
    """Row-major boolean grid with the source frame's dimensions."""

    bits: np.ndarray  # bool, shape (height, width)

    @property
    def width(self) -> int:
        return int(self.bits.shape[1])

    @property
    def height(self) -> int:
        return int(self.bits.shape[0])

    def count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class Keypoint:
    position: Point2
    visible: bool


@dataclass(frozen=True)
class PoseFrame:
    """Exactly 33 skeleton keypoints for one frame."""

    keypoints: tuple[Keypoint, ...]

    def __post_init__(self) -> None:
        if len(self.keypoints) != POSE_KEYPOINT_COUNT:
            raise TrackingError("pose-arity", f"expected {POSE_KEYPOINT_COUNT} keypoints, got {len(self.keypoints)}")


@dataclass(frozen=True)
class TrackerState:
    """Most recent fix plus how long the target has been lost.

    last_position only changes on a successful fix; lost_for counts
    consecutive frames without one and resets to 0 on success.
    """

    tracker_id: str
    last_position: Point2
    lost_for: int = 0
    history: tuple[Point2, ...] = ()

    def _with_fix(self, p: Point2) -> "TrackerState":
        hist = (self.history + (p,))[-HISTORY_LIMIT:]
        return replace(self, last_position=p, lost_for=0, history=hist)

    def _with_miss(self) -> "TrackerState":
        return replace(self, lost_for=self.lost_for + 1)


def sample_color_window(frame: np.ndarray, p: Point2) -> ColorWindow:
    """Window for the pixel under p: each channel +/- 10, clamped to [0, 255]."""
    height, width = frame.shape[:2]
    x, y = int(p.x), int(p.y)
    if not (0 <= x < width and 0 <= y < height):
        raise TrackingError("sample-outside-frame", f"({p.x}, {p.y}) outside {width}x{height}")
    r, g, b = (int(c) for c in frame[y, x, :3])
    lo = lambda c: max(0, c - COLOR_TOLERANCE)
    hi = lambda c: min(255, c + COLOR_TOLERANCE)
    return ColorWindow(lo(r), hi(r), lo(g), hi(g), lo(b), hi(b))


def segment_by_window(frame: np.ndarray, w: ColorWindow) -> BinaryMask:
    """Pixels whose three channels all fall inside the window (inclusive)."""
    r = frame[:, :, 0]
    g = frame[:, :, 1]
    b = frame[:, :, 2]
    bits = (
        (r >= w.r_lo) & (r <= w.r_hi)
        & (g >= w.g_lo) & (g <= w.g_hi)
        & (b >= w.b_lo) & (b <= w.b_hi)
    )
    return BinaryMask(bits)


def largest_component(mask: BinaryMask) -> np.ndarray | None:
    """Boolean grid of the largest 4-connected component, or None if empty.

    Ties on pixel count break by smallest bounding-box top-left corner in
    row-major order, then by first raster-scan discovery.
    """
    labels, count = ndimage.label(mask.bits)
    if count == 0:
        return None
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    best_size = sizes.max()
    candidates = np.flatnonzero(sizes == best_size)
    if len(candidates) == 1:
        chosen = int(candidates[0])
    else:
        slices = ndimage.find_objects(labels)
        chosen = int(
            min(candidates, key=lambda lab: (slices[lab - 1][0].start, slices[lab - 1][1].start, lab))
        )
    return labels == chosen


def largest_component_centroid(mask: BinaryMask) -> Point2 | None:
    """Mean pixel coordinate of the largest 4-connected component."""
    comp = largest_component(mask)
    if comp is None:
        return None
    rows, cols = np.nonzero(comp)
    return Point2(float(cols.mean()), float(rows.mean()))


def track_color(frame: np.ndarray, state: TrackerState, w: ColorWindow) -> TrackerState:
    """Re-fix a color tracker on this frame; hold the last position on loss."""
    state, _ = track_color_with_mask(frame, state, w)
    return state


def track_color_with_mask(
    frame: np.ndarray, state: TrackerState, w: ColorWindow
) -> tuple[TrackerState, BinaryMask]:
    """Like track_color, but also returns the segmentation mask so callers
    (the contour effect) can reuse it instead of segmenting twice."""
    mask = segment_by_window(frame, w)
    centroid = largest_component_centroid(mask)
    if centroid is None:
        return state._with_miss(), mask
    return state._with_fix(centroid), mask


def track_keypoint(pose: PoseFrame | None, state: TrackerState, index: int) -> TrackerState:
    """Follow keypoint `index`; invisible or missing pose counts as a loss."""
    if pose is None:
        return state._with_miss()
    kp = pose.keypoints[index]
    if not kp.visible:
        return state._with_miss()
    return state._with_fix(kp.position)


def nearest_keypoint(pose: PoseFrame, click: Point2) -> int:
    """Index of the visible keypoint closest to the click; ties pick the
    lowest index. Raises "no-pose" when nothing is visible."""
    best: tuple[float, int] | None = None
    for i, kp in enumerate(pose.keypoints):
        if not kp.visible:
            continue
        d = math.hypot(kp.position.x - click.x, kp.position.y - click.y)
        if best is None or d < best[0]:
            best = (d, i)
    if best is None:
        raise TrackingError("no-pose", "no visible keypoints in this frame")
    return best[1]


def pair_distance(a: TrackerState, b: TrackerState) -> float:
    """Euclidean pixel distance between two trackers' last positions."""
    return math.hypot(a.last_position.x - b.last_position.x, a.last_position.y - b.last_position.y)
