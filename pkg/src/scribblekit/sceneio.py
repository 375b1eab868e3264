"""Durable formats: scene documents (JSON), pose keypoint tracks (JSON),
run-length-encoded mask sidecars (binary), and numbered frame sequences.

Serialization is canonical: fixed key order, floats at 6 significant digits,
so structurally equal scenes serialize to identical bytes. Loading validates
eagerly and raises SceneIOError with a stable code.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

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
    ColorWindow,
    EffectSpec,
    KeypointSpec,
    Point2,
    Scene,
    ScribbleError,
    SketchElement,
    Stroke,
    Style,
    TrackerSpec,
    validate_scene,
)
from .tracking import POSE_KEYPOINT_COUNT, BinaryMask, Keypoint, PoseFrame

SCENE_FORMAT_VERSION = 1
FRAME_FILE_RE = re.compile(r"^frame_(\d{6})\.(png|bmp|jpg|jpeg)$")


class SceneIOError(ScribbleError):
    def __init__(self, code: str, message: str = "", diagnostics: list | None = None):
        super().__init__(code, message)
        self.diagnostics = diagnostics or []


def _round6(x: float) -> float:
    """Canonical numeric precision: 6 significant digits."""
    return float(f"{float(x):.6g}")


def _point(p: Point2) -> list[float]:
    return [_round6(p.x), _round6(p.y)]


def _parse_point(obj: object, where: str) -> Point2:
    if not (isinstance(obj, (list, tuple)) and len(obj) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj)):
        raise SceneIOError(f"schema({where})", f"expected [x, y], got {obj!r}")
    return Point2(float(obj[0]), float(obj[1]))


def _parse_points(obj: object, where: str) -> tuple[Point2, ...]:
    if not isinstance(obj, list):
        raise SceneIOError(f"schema({where})", "expected a list of points")
    return tuple(_parse_point(p, where) for p in obj)


def _parse_color(obj: object, where: str) -> tuple[int, int, int, int]:
    if not (isinstance(obj, list) and len(obj) == 4 and all(isinstance(v, int) for v in obj)):
        raise SceneIOError(f"schema({where})", f"expected [r, g, b, a], got {obj!r}")
    return (obj[0], obj[1], obj[2], obj[3])


def _expect(obj: dict, key: str, where: str):
    if key not in obj:
        raise SceneIOError(f"schema({where}.{key})", f"missing field {key!r}")
    return obj[key]


# ---------------------------------------------------------------------------
# scene documents
# ---------------------------------------------------------------------------


def _style_json(s: Style) -> dict:
    return {"color": list(s.color), "width": _round6(s.width), "opacity": _round6(s.opacity)}


def _params_json(kind: str, params) -> dict:
    if kind == "binding":
        return {"anchor_at_bind": None if params.anchor_at_bind is None else _point(params.anchor_at_bind)}
    if kind == "flipbook":
        return {
            "fps": _round6(params.fps),
            "anchor_at_bind": None if params.anchor_at_bind is None else _point(params.anchor_at_bind),
        }
    if kind == "trigger":
        return {
            "threshold": _round6(params.threshold),
            "direction": params.direction,
            "payload_fps": _round6(params.payload_fps),
            "payload_tracker_id": params.payload_tracker_id,
            "anchor_at_bind": None if params.anchor_at_bind is None else _point(params.anchor_at_bind),
        }
    if kind == "particles":
        return {
            "emitter_points": [_point(p) for p in params.emitter_points],
            "spawn_rate": _round6(params.spawn_rate),
            "speed": _round6(params.speed),
            "lifetime": _round6(params.lifetime),
            "motion_path": None if params.motion_path is None else [_point(p) for p in params.motion_path],
            "direction": [_round6(params.direction[0]), _round6(params.direction[1])],
            "loop_path": params.loop_path,
            "anchor_at_bind": None if params.anchor_at_bind is None else _point(params.anchor_at_bind),
        }
    if kind == "trajectory":
        return {
            "max_elements": params.max_elements,
            "fade": _round6(params.fade),
            "scale_step": _round6(params.scale_step),
            "stride": params.stride,
            "anchor_at_bind": None if params.anchor_at_bind is None else _point(params.anchor_at_bind),
        }
    if kind == "contour":
        return {
            "source": params.source,
            "mode": params.mode,
            "window_fraction": _round6(params.window_fraction),
            "cycles_per_second": _round6(params.cycles_per_second),
            "epsilon": _round6(params.epsilon),
            "stroke": _style_json(params.stroke),
            "fill": None if params.fill is None else list(params.fill),
        }
    raise SceneIOError("schema(effect.kind)", f"unknown kind {kind!r}")


def _scene_json(scene: Scene) -> dict:
    elements = []
    for el in scene.elements:
        elements.append({
            "id": el.id,
            "local_origin": _point(el.local_origin),
            "strokes": [
                {"points": [_point(p) for p in s.points], "style": _style_json(s.style)}
                for s in el.strokes
            ],
        })
    trackers = []
    for tr in scene.trackers:
        if isinstance(tr.kind, ColorBlobSpec):
            w = tr.kind.window
            trackers.append({
                "id": tr.id,
                "kind": "color",
                "seed_point": _point(tr.kind.seed_point),
                "window": [w.r_lo, w.r_hi, w.g_lo, w.g_hi, w.b_lo, w.b_hi],
            })
        else:
            trackers.append({"id": tr.id, "kind": "keypoint", "index": tr.kind.index})
    effects = []
    for fx in scene.effects:
        effects.append({
            "id": fx.id,
            "kind": fx.kind,
            "element_ids": list(fx.element_ids),
            "tracker_ids": list(fx.tracker_ids),
            "params": _params_json(fx.kind, fx.params),
        })
    return {
        "version": SCENE_FORMAT_VERSION,
        "scene": {
            "frame_size": [scene.frame_size[0], scene.frame_size[1]],
            "seed": scene.seed,
            "elements": elements,
            "trackers": trackers,
            "effects": effects,
        },
    }


def serialize_scene(scene: Scene) -> str:
    """Canonical text form; byte-identical for structurally equal scenes."""
    return json.dumps(_scene_json(scene), indent=2) + "\n"


def _parse_style(obj: object, where: str) -> Style:
    if not isinstance(obj, dict):
        raise SceneIOError(f"schema({where})", "style must be an object")
    color = _parse_color(_expect(obj, "color", where), f"{where}.color")
    width = _expect(obj, "width", where)
    opacity = _expect(obj, "opacity", where)
    if not isinstance(width, (int, float)) or not isinstance(opacity, (int, float)):
        raise SceneIOError(f"schema({where})", "width and opacity must be numbers")
    return Style(color=color, width=float(width), opacity=float(opacity))


def _parse_params(kind: str, obj: object, where: str):
    if not isinstance(obj, dict):
        raise SceneIOError(f"schema({where})", "params must be an object")

    def opt_point(key: str):
        v = obj.get(key)
        return None if v is None else _parse_point(v, f"{where}.{key}")

    try:
        if kind == "binding":
            return BindingParams(anchor_at_bind=opt_point("anchor_at_bind"))
        if kind == "flipbook":
            return FlipBookParams(
                fps=float(obj.get("fps", 8.0)), anchor_at_bind=opt_point("anchor_at_bind")
            )
        if kind == "trigger":
            return TriggerParams(
                threshold=float(obj.get("threshold", 60.0)),
                direction=str(obj.get("direction", "decrease")),
                payload_fps=float(obj.get("payload_fps", 8.0)),
                payload_tracker_id=obj.get("payload_tracker_id"),
                anchor_at_bind=opt_point("anchor_at_bind"),
            )
        if kind == "particles":
            motion = obj.get("motion_path")
            direction = obj.get("direction", [0.0, 1.0])
            return ParticleParams(
                emitter_points=_parse_points(_expect(obj, "emitter_points", where), f"{where}.emitter_points"),
                spawn_rate=float(obj.get("spawn_rate", 10.0)),
                speed=float(obj.get("speed", 60.0)),
                lifetime=float(obj.get("lifetime", 2.0)),
                motion_path=None if motion is None else _parse_points(motion, f"{where}.motion_path"),
                direction=(float(direction[0]), float(direction[1])),
                loop_path=bool(obj.get("loop_path", False)),
                anchor_at_bind=opt_point("anchor_at_bind"),
            )
        if kind == "trajectory":
            return TrajectoryParams(
                max_elements=int(obj.get("max_elements", 30)),
                fade=float(obj.get("fade", 0.9)),
                scale_step=float(obj.get("scale_step", 1.0)),
                stride=int(obj.get("stride", 1)),
                anchor_at_bind=opt_point("anchor_at_bind"),
            )
        if kind == "contour":
            fill = obj.get("fill")
            return ContourParams(
                source=str(obj.get("source", "tracker")),
                mode=str(obj.get("mode", "static")),
                window_fraction=float(obj.get("window_fraction", 0.25)),
                cycles_per_second=float(obj.get("cycles_per_second", 0.5)),
                epsilon=float(obj.get("epsilon", 2.0)),
                stroke=_parse_style(obj.get("stroke", _style_json(Style())), f"{where}.stroke"),
                fill=None if fill is None else _parse_color(fill, f"{where}.fill"),
            )
    except (TypeError, ValueError) as exc:
        raise SceneIOError(f"schema({where})", str(exc)) from exc
    raise SceneIOError("schema(effect.kind)", f"unknown kind {kind!r}")


# the session service builds and edits params through the same JSON shapes
params_to_json = _params_json
parse_effect_params = _parse_params
parse_style = _parse_style


def parse_scene(text: str) -> Scene:
    """Parse and fully validate a scene document.

    Raises "syntax" for malformed JSON, "schema(field)" for shape violations,
    and "invalid-scene" (with embedded diagnostics) for semantic ones.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneIOError("syntax", str(exc)) from exc
    if not isinstance(doc, dict):
        raise SceneIOError("schema(document)", "document must be an object")
    version = _expect(doc, "version", "document")
    if version != SCENE_FORMAT_VERSION:
        raise SceneIOError("version", f"unsupported version {version!r}")
    scene_obj = _expect(doc, "scene", "document")
    if not isinstance(scene_obj, dict):
        raise SceneIOError("schema(scene)", "scene must be an object")

    fs = _expect(scene_obj, "frame_size", "scene")
    if not (isinstance(fs, list) and len(fs) == 2 and all(isinstance(v, int) for v in fs)):
        raise SceneIOError("schema(scene.frame_size)", f"expected [w, h] ints, got {fs!r}")
    seed = scene_obj.get("seed", 0)
    if not isinstance(seed, int):
        raise SceneIOError("schema(scene.seed)", "seed must be an integer")

    elements = []
    for i, raw in enumerate(scene_obj.get("elements", [])):
        where = f"elements[{i}]"
        if not isinstance(raw, dict):
            raise SceneIOError(f"schema({where})", "element must be an object")
        strokes = []
        for j, sraw in enumerate(_expect(raw, "strokes", where)):
            swhere = f"{where}.strokes[{j}]"
            strokes.append(Stroke(
                points=_parse_points(_expect(sraw, "points", swhere), f"{swhere}.points"),
                style=_parse_style(_expect(sraw, "style", swhere), f"{swhere}.style"),
            ))
        elements.append(SketchElement(
            id=str(_expect(raw, "id", where)),
            strokes=tuple(strokes),
            local_origin=_parse_point(_expect(raw, "local_origin", where), f"{where}.local_origin"),
        ))

    trackers = []
    for i, raw in enumerate(scene_obj.get("trackers", [])):
        where = f"trackers[{i}]"
        if not isinstance(raw, dict):
            raise SceneIOError(f"schema({where})", "tracker must be an object")
        kind = _expect(raw, "kind", where)
        if kind == "color":
            window = _expect(raw, "window", where)
            if not (isinstance(window, list) and len(window) == 6 and all(isinstance(v, int) for v in window)):
                raise SceneIOError(f"schema({where}.window)", "window must be 6 ints")
            spec = ColorBlobSpec(
                seed_point=_parse_point(_expect(raw, "seed_point", where), f"{where}.seed_point"),
                window=ColorWindow(*window),
            )
        elif kind == "keypoint":
            index = _expect(raw, "index", where)
            if not isinstance(index, int) or not (0 <= index < POSE_KEYPOINT_COUNT):
                raise SceneIOError("schema(keypoint-index)", f"index {index!r} outside [0,32]")
            spec = KeypointSpec(index=index)
        else:
            raise SceneIOError(f"schema({where}.kind)", f"unknown tracker kind {kind!r}")
        trackers.append(TrackerSpec(id=str(_expect(raw, "id", where)), kind=spec))

    effects = []
    for i, raw in enumerate(scene_obj.get("effects", [])):
        where = f"effects[{i}]"
        if not isinstance(raw, dict):
            raise SceneIOError(f"schema({where})", "effect must be an object")
        kind = str(_expect(raw, "kind", where))
        effects.append(EffectSpec(
            id=str(_expect(raw, "id", where)),
            kind=kind,
            element_ids=tuple(str(e) for e in raw.get("element_ids", [])),
            tracker_ids=tuple(str(t) for t in raw.get("tracker_ids", [])),
            params=_parse_params(kind, raw.get("params", {}), f"{where}.params"),
        ))

    scene = Scene(
        frame_size=(fs[0], fs[1]),
        elements=tuple(elements),
        trackers=tuple(trackers),
        effects=tuple(effects),
        seed=seed,
    )
    diags = validate_scene(scene)
    if diags:
        raise SceneIOError(
            "invalid-scene",
            "; ".join(f"{d.rule}({d.subject})" for d in diags),
            diagnostics=diags,
        )
    return scene


def canonicalize_scene(scene: Scene) -> Scene:
    """Round every float to the serialized precision so parse(serialize(s))
    is the identity. Serializing s and canonicalize(s) gives the same bytes."""
    return parse_scene(serialize_scene(scene))


def load_scene(path: str | Path) -> Scene:
    return parse_scene(Path(path).read_text())


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(serialize_scene(scene))


# ---------------------------------------------------------------------------
# pose tracks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoseTrack:
    frame_rate: float
    frames: tuple[PoseFrame, ...]

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def frame_or_none(self, index: int) -> PoseFrame | None:
        return self.frames[index] if 0 <= index < len(self.frames) else None


_INVISIBLE_FRAME = None  # sentinel documented in the schema: null keypoints


def parse_pose_track(text: str) -> PoseTrack:
    """Frame-indexed keypoint track.

    Every frame must carry exactly 33 [x, y, visible] entries; a null
    keypoints field stands for a frame with no detection (33 invisible
    points). Indices must be contiguous from 0.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneIOError("syntax", str(exc)) from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("frames"), list):
        raise SceneIOError("schema(pose)", "expected {frame_rate, frames: [...]}")
    frame_rate = doc.get("frame_rate", 60.0)
    if not isinstance(frame_rate, (int, float)) or frame_rate <= 0:
        raise SceneIOError("schema(pose.frame_rate)", "frame_rate must be > 0")

    entries = doc["frames"]
    if not entries:
        raise SceneIOError("pose-gap", "empty track: no frame 0")
    frames: list[PoseFrame] = []
    for i, raw in enumerate(entries):
        if not isinstance(raw, dict) or "index" not in raw:
            raise SceneIOError("schema(pose.frames)", f"frame {i} must be an object with an index")
        if raw["index"] != i:
            raise SceneIOError("pose-gap", f"expected frame index {i}, got {raw['index']!r}")
        kps = raw.get("keypoints")
        if kps is _INVISIBLE_FRAME:
            frames.append(PoseFrame(tuple(Keypoint(Point2(0.0, 0.0), False)
                                          for _ in range(POSE_KEYPOINT_COUNT))))
            continue
        if not isinstance(kps, list) or len(kps) != POSE_KEYPOINT_COUNT:
            raise SceneIOError(f"pose-arity({i})",
                               f"frame {i} has {len(kps) if isinstance(kps, list) else '??'} keypoints")
        parsed = []
        for k, entry in enumerate(kps):
            if not (isinstance(entry, list) and len(entry) == 3):
                raise SceneIOError(f"schema(pose.frames[{i}][{k}])", "expected [x, y, visible]")
            parsed.append(Keypoint(Point2(float(entry[0]), float(entry[1])), bool(entry[2])))
        frames.append(PoseFrame(tuple(parsed)))
    return PoseTrack(frame_rate=float(frame_rate), frames=tuple(frames))


def serialize_pose_track(track: PoseTrack) -> str:
    frames = []
    for i, frame in enumerate(track.frames):
        frames.append({
            "index": i,
            "keypoints": [
                [_round6(kp.position.x), _round6(kp.position.y), kp.visible]
                for kp in frame.keypoints
            ],
        })
    doc = {"frame_rate": _round6(track.frame_rate), "frame_count": len(frames), "frames": frames}
    return json.dumps(doc, indent=2) + "\n"


def load_pose_track(path: str | Path) -> PoseTrack:
    return parse_pose_track(Path(path).read_text())


def save_pose_track(track: PoseTrack, path: str | Path) -> None:
    Path(path).write_text(serialize_pose_track(track))


# ---------------------------------------------------------------------------
# mask sidecars: per frame [width, height, runs...] as little-endian uint32.
# Runs alternate cleared/set starting with cleared and sum to width*height.
# ---------------------------------------------------------------------------


def _mask_runs(bits: np.ndarray) -> list[int]:
    flat = bits.ravel().astype(np.uint8)
    changes = np.flatnonzero(np.diff(flat)) + 1
    edges = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(edges).tolist()
    if flat.size and flat[0] == 1:
        runs = [0] + runs
    return runs


def save_mask_track(masks: list[BinaryMask], path: str | Path) -> None:
    with open(path, "wb") as fh:
        for mask in masks:
            runs = _mask_runs(mask.bits)
            fh.write(struct.pack("<2I", mask.width, mask.height))
            fh.write(np.asarray(runs, dtype="<u4").tobytes())


def load_mask_track(path: str | Path) -> list[BinaryMask]:
    data = Path(path).read_bytes()
    if len(data) % 4 != 0:
        raise SceneIOError("schema(mask)", "mask sidecar must be whole uint32 words")
    words = np.frombuffer(data, dtype="<u4")
    masks: list[BinaryMask] = []
    pos = 0
    while pos < len(words):
        if pos + 2 > len(words):
            raise SceneIOError("schema(mask)", "truncated mask header")
        width, height = int(words[pos]), int(words[pos + 1])
        pos += 2
        if width <= 0 or height <= 0:
            raise SceneIOError("schema(mask)", f"bad dimensions {width}x{height}")
        total = width * height
        flat = np.zeros(total, dtype=bool)
        covered = 0
        value = False
        while covered < total:
            if pos >= len(words):
                raise SceneIOError("schema(mask)", "runs do not cover the frame")
            run = int(words[pos])
            pos += 1
            if covered + run > total:
                raise SceneIOError("schema(mask)", "runs overflow the frame")
            if value:
                flat[covered:covered + run] = True
            covered += run
            value = not value
        masks.append(BinaryMask(flat.reshape(height, width)))
    return masks


# ---------------------------------------------------------------------------
# frame sequences
# ---------------------------------------------------------------------------


def save_frame(frame: np.ndarray, path: str | Path) -> None:
    Image.fromarray(frame, mode="RGB").save(path)


def write_frame_sequence(frames: list[np.ndarray], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        save_frame(frame, directory / f"frame_{i:06d}.png")


class FrameSequence:
    """Ordered, single-consumer iterator over frame_%06d image files.

    The index structure is checked eagerly ("frame-gap"); dimensions are
    verified while iterating ("size-mismatch(i)" on the first divergence).
    """

    def __init__(self, directory: str | Path):
        directory = Path(directory)
        indexed: dict[int, Path] = {}
        for path in directory.iterdir():
            m = FRAME_FILE_RE.match(path.name)
            if m:
                indexed[int(m.group(1))] = path
        if not indexed:
            raise SceneIOError("frame-gap", f"no frame files in {directory}")
        count = max(indexed) + 1
        for i in range(count):
            if i not in indexed:
                raise SceneIOError("frame-gap", f"missing frame {i}")
        self._paths = [indexed[i] for i in range(count)]

    def __len__(self) -> int:
        return len(self._paths)

    def __iter__(self) -> Iterator[np.ndarray]:
        first_shape: tuple[int, ...] | None = None
        for i, path in enumerate(self._paths):
            with Image.open(path) as img:
                frame = np.asarray(img.convert("RGB"))
            if first_shape is None:
                first_shape = frame.shape[:2]
            elif frame.shape[:2] != first_shape:
                raise SceneIOError(
                    f"size-mismatch({i})",
                    f"frame {i} is {frame.shape[1]}x{frame.shape[0]}, expected "
                    f"{first_shape[1]}x{first_shape[0]}",
                )
            yield frame


def load_frame_sequence(directory: str | Path) -> FrameSequence:
    return FrameSequence(directory)
