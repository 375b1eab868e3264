"""Outer-contour extraction, polyline simplification, animated contour
windows, and region fills for the contour-highlight effect.

The contour of a mask is recomputed from scratch every frame; there is no
temporal state to drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Color, Diagnostic, EffectSpec, Point2, ScribbleError, Style
from .tracking import BinaryMask, largest_component

DEFAULT_EPSILON = 2.0
DEFAULT_WINDOW_FRACTION = 0.25
DEFAULT_CYCLES_PER_SECOND = 0.5


class ContourError(ScribbleError):
    pass


@dataclass(frozen=True)
class ContourPolyline:
    """Closed ring of pixel-center points; the first point is not repeated at
    the end, closure is implicit. Rings from clean segmentations are simple;
    degenerate masks (1-px spurs) may revisit a vertex."""

    points: tuple[Point2, ...]
    source_frame: int = 0

    def perimeter(self) -> float:
        pts = self.points
        if len(pts) < 2:
            return 0.0
        total = 0.0
        for a, b in zip(pts, pts[1:] + (pts[0],)):
            total += math.hypot(b.x - a.x, b.y - a.y)
        return total


@dataclass(frozen=True)
class ContourParams:
    """Contour-highlight configuration.

    source selects where the per-frame mask comes from: "tracker" reuses the
    bound color tracker's segmentation, "body-mask" reads the ingested
    segmentation sidecar. mode "animated" sweeps a partial line of
    window_fraction of the perimeter around the ring at cycles_per_second.
    """

    source: str = "tracker"  # or "body-mask"
    mode: str = "static"     # or "animated"
    window_fraction: float = DEFAULT_WINDOW_FRACTION
    cycles_per_second: float = DEFAULT_CYCLES_PER_SECOND
    epsilon: float = DEFAULT_EPSILON
    stroke: Style = Style()
    fill: Optional[Color] = None

    def check(self, fx: EffectSpec) -> list[Diagnostic]:
        diags = []
        if self.source not in ("tracker", "body-mask"):
            diags.append(Diagnostic("contour-params", fx.id, f"bad source {self.source!r}"))
        elif self.source == "tracker" and len(fx.tracker_ids) != 1:
            diags.append(Diagnostic("contour-arity", fx.id, "tracker source needs exactly 1 tracker"))
        elif self.source == "body-mask" and fx.tracker_ids:
            diags.append(Diagnostic("contour-arity", fx.id, "body-mask source takes no trackers"))
        if self.mode not in ("static", "animated"):
            diags.append(Diagnostic("contour-params", fx.id, f"bad mode {self.mode!r}"))
        if not (0.0 < self.window_fraction <= 1.0):
            diags.append(Diagnostic("contour-params", fx.id, "window_fraction must be in (0,1]"))
        if not (self.cycles_per_second > 0):
            diags.append(Diagnostic("contour-params", fx.id, "cycles_per_second must be > 0"))
        if self.epsilon < 0:
            diags.append(Diagnostic("contour-params", fx.id, "epsilon must be >= 0"))
        if self.fill is not None:
            ok = len(self.fill) == 4 and all(isinstance(c, int) and 0 <= c <= 255 for c in self.fill)
            if not ok:
                diags.append(Diagnostic("contour-params", fx.id, "fill must be RGBA ints in [0,255]"))
        return diags


# Moore neighborhood in clockwise scan order starting north, as (drow, dcol).
_MOORE = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
_MOORE_INDEX = {d: i for i, d in enumerate(_MOORE)}


def extract_outer_contour(mask: BinaryMask, source_frame: int = 0) -> ContourPolyline:
    """Boundary ring of the largest component's outer boundary.

    Moore-neighbor tracing, starting at the topmost-then-leftmost boundary
    pixel; holes are ignored. The visited pixel set equals the component's
    pixels that have a 4-neighbor in the outer background.
    """
    comp = largest_component(mask)
    if comp is None:
        raise ContourError("empty-mask", "cannot trace an empty mask")

    rows, cols = np.nonzero(comp)
    start = (int(rows[0]), int(cols[0]))  # np.nonzero scans row-major

    h, w = comp.shape

    def is_set(r: int, c: int) -> bool:
        return 0 <= r < h and 0 <= c < w and bool(comp[r, c])

    # Single-pixel component: the ring degenerates to that pixel.
    r0, c0 = start
    if not any(is_set(r0 + dr, c0 + dc) for dr, dc in _MOORE):
        return ContourPolyline((Point2(float(c0), float(r0)),), source_frame)

    ring: list[Point2] = []
    # entered the start pixel as if scanning row-major: backtrack is its west neighbor
    current = start
    backtrack = (r0, c0 - 1)
    first_move: tuple[tuple[int, int], tuple[int, int]] | None = None
    while True:
        dr, dc = backtrack[0] - current[0], backtrack[1] - current[1]
        scan_from = _MOORE_INDEX[(dr, dc)]
        nxt = new_backtrack = None
        for k in range(1, 9):
            d = _MOORE[(scan_from + k) % 8]
            cand = (current[0] + d[0], current[1] + d[1])
            if is_set(*cand):
                prev = _MOORE[(scan_from + k - 1) % 8]
                nxt = cand
                new_backtrack = (current[0] + prev[0], current[1] + prev[1])
                break
        assert nxt is not None and new_backtrack is not None  # component has >= 2 pixels
        move = (current, nxt)
        if first_move is None:
            first_move = move
        elif move == first_move:
            break  # about to repeat the opening edge: the loop is closed
        ring.append(Point2(float(current[1]), float(current[0])))
        current, backtrack = nxt, new_backtrack
        if len(ring) > 4 * comp.size:
            raise ContourError("trace-overflow", "boundary tracing failed to close")
    return ContourPolyline(tuple(ring), source_frame)


def _seg_distance(px: np.ndarray, py: np.ndarray, a: Point2, b: Point2) -> np.ndarray:
    """Distance from points (px, py) to segment a-b (vectorized)."""
    abx, aby = b.x - a.x, b.y - a.y
    apx, apy = px - a.x, py - a.y
    denom = abx * abx + aby * aby
    if denom == 0.0:
        return np.hypot(apx, apy)
    t = np.clip((apx * abx + apy * aby) / denom, 0.0, 1.0)
    return np.hypot(apx - t * abx, apy - t * aby)


def _rdp(points: list[Point2], epsilon: float) -> list[Point2]:
    """Iterative Ramer-Douglas-Peucker on an open chain; keeps both ends.

    The split vertex is the first index attaining the maximum distance, which
    makes repeated simplification at the same epsilon a fixed point.
    """
    n = len(points)
    keep = [False] * n
    keep[0] = keep[-1] = True
    px = np.array([p.x for p in points])
    py = np.array([p.y for p in points])
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        d = _seg_distance(px[i + 1:j], py[i + 1:j], points[i], points[j])
        k = int(np.argmax(d))  # argmax returns the first maximal index
        if d[k] > epsilon:
            split = i + 1 + k
            keep[split] = True
            stack.append((i, split))
            stack.append((split, j))
    return [p for p, k in zip(points, keep) if k]


def simplify_polyline(poly: ContourPolyline, epsilon: float) -> ContourPolyline:
    """Simplify a closed ring; every input vertex stays within epsilon of the
    output ring. epsilon 0 collapses exactly-collinear runs and nothing else."""
    pts = list(poly.points)
    if len(pts) <= 2:
        return poly
    out = _rdp(pts + [pts[0]], epsilon)
    out.pop()  # drop the duplicated closing vertex
    return ContourPolyline(tuple(out), poly.source_frame)


def contour_window(
    poly: ContourPolyline, t: float, window_fraction: float, cycles_per_second: float
) -> tuple[Point2, ...]:
    """Open sub-polyline of arc length window_fraction * perimeter whose start
    slides around the ring at cycles_per_second; wraps across the closure."""
    pts = poly.points
    if window_fraction >= 1.0 or len(pts) < 2:
        return pts + (pts[0],) if len(pts) >= 2 else pts

    closed = pts + (pts[0],)
    cum = [0.0]
    for a, b in zip(closed, closed[1:]):
        cum.append(cum[-1] + math.hypot(b.x - a.x, b.y - a.y))
    perimeter = cum[-1]
    if perimeter == 0.0:
        return pts

    phase = (t * cycles_per_second) % 1.0
    start_s = phase * perimeter
    window_len = window_fraction * perimeter

    def point_at(s: float) -> Point2:
        s = s % perimeter
        # binary search would be fine; rings are short after simplification
        for i in range(1, len(cum)):
            if s <= cum[i]:
                seg = cum[i] - cum[i - 1]
                tt = 0.0 if seg == 0.0 else (s - cum[i - 1]) / seg
                a, b = closed[i - 1], closed[i]
                return Point2(a.x + (b.x - a.x) * tt, a.y + (b.y - a.y) * tt)
        return closed[-1]

    out = [point_at(start_s)]
    # interior vertices strictly inside (start_s, start_s + window_len)
    s = start_s
    remaining = window_len
    idx = next(i for i in range(1, len(cum)) if s <= cum[i])
    while remaining > 0:
        seg_end = cum[idx]
        step = seg_end - s
        if step >= remaining:
            out.append(point_at(s + remaining))
            break
        if step > 0:
            out.append(closed[idx])
        remaining -= step
        s = seg_end
        idx += 1
        if idx == len(cum):
            idx = 1
            s = 0.0
    return tuple(out)


@dataclass(frozen=True)
class RegionFill:
    """Raster fill of a mask's largest component, plus its outer ring so
    vector backends can draw it as a filled path."""

    bits: np.ndarray  # bool grid of the filled component only
    color: Color
    ring: ContourPolyline


def fill_region(mask: BinaryMask, color: Color, source_frame: int = 0) -> RegionFill:
    """Fill fragment for the largest component of a non-empty mask."""
    comp = largest_component(mask)
    if comp is None:
        raise ContourError("empty-mask", "cannot fill an empty mask")
    ring = extract_outer_contour(BinaryMask(comp), source_frame)
    return RegionFill(bits=comp, color=color, ring=ring)
