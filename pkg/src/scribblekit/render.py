"""Per-frame overlay resolution, deterministic SVG emission, and raster
compositing.

Drawables carry fully resolved world-space points; transforms are applied
while resolving so both backends consume the same geometry. Draw order is
scene declaration order, with an effect's clones ordered oldest first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import contour as contour_mod
from .contour import ContourParams, ContourPolyline, RegionFill
from .effects import flipbook_frame, particle_position
from .model import Point2, Scene, ScribbleError, SketchElement, Style

SUPERSAMPLE = 4  # raster antialiasing grid per pixel axis


class RenderError(ScribbleError):
    pass


@dataclass(frozen=True)
class Drawable:
    """One stroke instance, resolved to world coordinates.

    instance distinguishes clones of the same element within one effect;
    closed marks rings that should be emitted with a closing segment.
    """

    element_id: str
    instance: int
    points: tuple[Point2, ...]
    style: Style
    opacity_mul: float = 1.0
    closed: bool = False


@dataclass(frozen=True)
class FrameOverlay:
    """Resolved draw list for one frame: stroke drawables and region fills in
    a single paint order."""

    frame_index: int
    items: tuple = ()  # Drawable | RegionFill, in draw order

    @property
    def drawables(self) -> tuple[Drawable, ...]:
        return tuple(it for it in self.items if isinstance(it, Drawable))

    @property
    def fills(self) -> tuple[RegionFill, ...]:
        return tuple(it for it in self.items if isinstance(it, RegionFill))

    def instance_count(self) -> int:
        return len({(d.element_id, d.instance) for d in self.drawables})


@dataclass
class ContourState:
    """Per-frame contour products, refreshed by the engine before resolving."""

    ring: ContourPolyline | None = None
    fill: RegionFill | None = None


def _element_drawables(
    el: SketchElement,
    instance: int,
    translate: Point2,
    scale: float = 1.0,
    opacity_mul: float = 1.0,
) -> list[Drawable]:
    out = []
    for stroke in el.strokes:
        if scale == 1.0:
            pts = tuple(Point2(p.x + translate.x, p.y + translate.y) for p in stroke.points)
        else:
            ox, oy = el.local_origin.x + translate.x, el.local_origin.y + translate.y
            pts = tuple(
                Point2(ox + (p.x - el.local_origin.x) * scale, oy + (p.y - el.local_origin.y) * scale)
                for p in stroke.points
            )
        out.append(Drawable(el.id, instance, pts, stroke.style, opacity_mul))
    return out


def _anchor_delta(anchor_at_bind: Point2 | None, anchor_now: Point2 | None) -> Point2:
    if anchor_at_bind is None or anchor_now is None:
        return Point2(0.0, 0.0)
    return anchor_now - anchor_at_bind


def resolve_frame(
    scene: Scene,
    tracker_states: dict,
    effect_states: dict,
    frame_index: int,
    fps: float = 60.0,
) -> FrameOverlay:
    """Assemble the overlay for one frame from resolved tracker and effect
    states.

    Elements referenced by no effect render statically. Flip-books and
    triggers own the visibility of their member elements; binding-style
    translations from several effects referencing the same element accumulate
    in declaration order, and the element is emitted once, in the slot of the
    first effect that references it.
    """
    for tr in scene.trackers:
        if tr.id not in tracker_states:
            raise RenderError("state-desync", f"missing tracker state {tr.id!r}")
    for fx in scene.effects:
        if fx.id not in effect_states:
            raise RenderError("state-desync", f"missing effect state {fx.id!r}")

    anchor_now = {tid: st.last_position for tid, st in tracker_states.items()}

    # visibility gates and accumulated translations for shared-instance effects
    referenced: set[str] = set()
    hidden: set[str] = set()
    translation: dict[str, Point2] = {}

    def add_translation(eid: str, delta: Point2) -> None:
        base = translation.get(eid, Point2(0.0, 0.0))
        translation[eid] = base + delta

    for fx in scene.effects:
        referenced.update(fx.element_ids)
        state = effect_states[fx.id]
        if fx.kind == "binding":
            for eid in fx.element_ids:
                add_translation(eid, _anchor_delta(state.anchor_at_bind, anchor_now[fx.tracker_ids[0]]))
        elif fx.kind == "flipbook":
            t = (frame_index - state.start_frame) / fps
            active = fx.element_ids[flipbook_frame(len(fx.element_ids), fx.params.fps, max(t, 0.0))]
            hidden.update(eid for eid in fx.element_ids if eid != active)
            if fx.tracker_ids and state.anchor_at_bind is not None:
                add_translation(active, _anchor_delta(state.anchor_at_bind, anchor_now[fx.tracker_ids[0]]))
        elif fx.kind == "trigger":
            if state.playing and state.play_started_at is not None:
                t = (frame_index - state.play_started_at) / fps
                idx = int(math.floor(t * fx.params.payload_fps))
                active = fx.element_ids[idx] if 0 <= idx < len(fx.element_ids) else None
            else:
                active = None
            hidden.update(eid for eid in fx.element_ids if eid != active)
            if active is not None and fx.params.payload_tracker_id is not None and state.anchor_at_fire is not None:
                add_translation(active, _anchor_delta(state.anchor_at_fire, anchor_now[fx.params.payload_tracker_id]))
        elif fx.kind in ("particles", "trajectory"):
            hidden.update(fx.element_ids)  # only clones render

    items: list = []
    emitted: set[str] = set()

    def emit_shared(eid: str) -> None:
        if eid in emitted or eid in hidden:
            return
        emitted.add(eid)
        items.extend(_element_drawables(scene.element(eid), 0, translation.get(eid, Point2(0.0, 0.0))))

    for el in scene.elements:
        if el.id not in referenced:
            items.extend(_element_drawables(el, 0, Point2(0.0, 0.0)))

    for fx in scene.effects:
        state = effect_states[fx.id]
        if fx.kind in ("binding", "flipbook", "trigger"):
            for eid in fx.element_ids:
                emit_shared(eid)
        elif fx.kind == "particles":
            template = scene.element(fx.element_ids[0])
            for i, particle in enumerate(state.particles):
                pos = particle_position(fx.params, particle)
                delta = Point2(pos.x - template.local_origin.x, pos.y - template.local_origin.y)
                items.extend(_element_drawables(template, i + 1, delta))
        elif fx.kind == "trajectory":
            template = scene.element(fx.element_ids[0])
            clones = state.clones
            n = len(clones)
            base = state.anchor_at_bind
            for i, anchor in enumerate(clones):  # oldest first
                k = n - 1 - i  # steps back from newest
                delta = _anchor_delta(base, anchor)
                items.extend(
                    _element_drawables(
                        template, i + 1, delta,
                        scale=fx.params.scale_step ** k,
                        opacity_mul=fx.params.fade ** k,
                    )
                )
        elif fx.kind == "contour":
            if state.ring is not None and len(state.ring.points) >= 2:
                params: ContourParams = fx.params
                if state.fill is not None:
                    items.append(state.fill)
                if params.mode == "animated":
                    t = frame_index / fps
                    pts = contour_mod.contour_window(
                        state.ring, t, params.window_fraction, params.cycles_per_second
                    )
                    closed = params.window_fraction >= 1.0
                else:
                    pts = state.ring.points
                    closed = True
                if len(pts) >= 2:
                    items.append(Drawable(fx.id, 0, tuple(pts), params.stroke, 1.0, closed=closed))

    return FrameOverlay(frame_index, tuple(items))


# ---------------------------------------------------------------------------
# SVG backend
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    """Fixed 6-significant-digit formatting shared by all emitters."""
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.6g}"


def _path_d(points: tuple[Point2, ...], closed: bool) -> str:
    parts = [f"M {_fmt(points[0].x)} {_fmt(points[0].y)}"]
    for p in points[1:]:
        parts.append(f"L {_fmt(p.x)} {_fmt(p.y)}")
    if closed:
        parts.append("Z")
    return " ".join(parts)


def emit_svg(overlay: FrameOverlay, frame_size: tuple[int, int]) -> str:
    """Byte-deterministic SVG 1.1 document: fixed attribute order, fixed
    number formatting, one path per fill and per stroke drawable."""
    width, height = frame_size
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
    ]
    for item in overlay.items:
        if isinstance(item, RegionFill):
            r, g, b, a = item.color
            if len(item.ring.points) < 2:
                continue
            lines.append(
                f'<path d="{_path_d(item.ring.points, closed=True)}" fill="rgb({r},{g},{b})" '
                f'fill-opacity="{_fmt(a / 255)}" stroke="none"/>'
            )
        else:
            d = item
            r, g, b, a = d.style.color
            opacity = d.style.opacity * (a / 255) * d.opacity_mul
            lines.append(
                f'<path d="{_path_d(d.points, d.closed)}" fill="none" stroke="rgb({r},{g},{b})" '
                f'stroke-opacity="{_fmt(opacity)}" stroke-width="{_fmt(d.style.width)}" '
                'stroke-linecap="round" stroke-linejoin="round"/>'
            )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# raster backend
# ---------------------------------------------------------------------------


def _stroke_coverage(points: tuple[Point2, ...], width: float, frame_w: int, frame_h: int):
    """Antialiased coverage of a round-capped, round-joined polyline.

    Returns (x0, y0, coverage) where coverage is a float grid in [0, 1] for
    the stroke's padded bounding box, or None when fully off-frame. Coverage
    is the supersampled fraction of each pixel within width/2 of the path, so
    nothing lands outside the bounding box padded by width/2 + 1.
    """
    radius = width / 2.0
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    x0 = max(int(math.floor(min(xs) - radius - 1)), 0)
    y0 = max(int(math.floor(min(ys) - radius - 1)), 0)
    x1 = min(int(math.ceil(max(xs) + radius + 1)), frame_w - 1)
    y1 = min(int(math.ceil(max(ys) + radius + 1)), frame_h - 1)
    if x1 < x0 or y1 < y0:
        return None
    bw, bh = x1 - x0 + 1, y1 - y0 + 1

    ss = SUPERSAMPLE
    inside = np.zeros((bh * ss, bw * ss), dtype=bool)
    # subsample centers in world coordinates
    sub_x = x0 + (np.arange(bw * ss) + 0.5) / ss - 0.5
    sub_y = y0 + (np.arange(bh * ss) + 0.5) / ss - 0.5

    segs = list(zip(points, points[1:])) if len(points) > 1 else [(points[0], points[0])]
    for a, b in segs:
        sx0 = np.searchsorted(sub_x, min(a.x, b.x) - radius - 0.5)
        sx1 = np.searchsorted(sub_x, max(a.x, b.x) + radius + 0.5)
        sy0 = np.searchsorted(sub_y, min(a.y, b.y) - radius - 0.5)
        sy1 = np.searchsorted(sub_y, max(a.y, b.y) + radius + 0.5)
        if sx0 >= sx1 or sy0 >= sy1:
            continue
        gx = sub_x[sx0:sx1][None, :]
        gy = sub_y[sy0:sy1][:, None]
        abx, aby = b.x - a.x, b.y - a.y
        denom = abx * abx + aby * aby
        if denom == 0.0:
            dist = np.hypot(gx - a.x, gy - a.y)
        else:
            t = np.clip(((gx - a.x) * abx + (gy - a.y) * aby) / denom, 0.0, 1.0)
            dist = np.hypot(gx - a.x - t * abx, gy - a.y - t * aby)
        inside[sy0:sy1, sx0:sx1] |= dist <= radius
    coverage = inside.reshape(bh, ss, bw, ss).mean(axis=(1, 3))
    return x0, y0, coverage


def _blend(base: np.ndarray, x0: int, y0: int, coverage: np.ndarray, color, alpha_mul: float) -> None:
    """Source-over one drawable onto the 8-bit base, rounding immediately so
    compositing chains associate exactly."""
    r, g, b, a = color
    alpha = coverage * (a / 255.0) * alpha_mul
    if alpha.max() <= 0.0:
        return
    h, w = coverage.shape
    region = base[y0:y0 + h, x0:x0 + w, :].astype(np.float64)
    src = np.array([r, g, b], dtype=np.float64)
    out = src[None, None, :] * alpha[:, :, None] + region * (1.0 - alpha[:, :, None])
    base[y0:y0 + h, x0:x0 + w, :] = np.clip(np.rint(out), 0, 255).astype(np.uint8)


def composite(
    base: np.ndarray, overlay: FrameOverlay, frame_size: tuple[int, int] | None = None
) -> np.ndarray:
    """Source-over composite of the overlay onto a copy of the base frame.

    Each item blends and rounds to 8-bit independently, so compositing
    overlay A then overlay B equals compositing their concatenation.
    """
    h, w = base.shape[:2]
    if frame_size is not None and (w, h) != tuple(frame_size):
        raise RenderError("size-mismatch", f"base {w}x{h} vs expected {frame_size[0]}x{frame_size[1]}")
    out = base.copy()
    for item in overlay.items:
        if isinstance(item, RegionFill):
            if item.bits.shape != (h, w):
                raise RenderError("size-mismatch", f"fill mask {item.bits.shape} vs frame {(h, w)}")
            _blend(out, 0, 0, item.bits.astype(np.float64), item.color, 1.0)
        else:
            d = item
            pts = d.points + (d.points[0],) if d.closed else d.points
            cov = _stroke_coverage(pts, d.style.width, w, h)
            if cov is None:
                continue
            x0, y0, coverage = cov
            _blend(out, x0, y0, coverage, d.style.color, d.style.opacity * d.opacity_mul)
    return out
