"""Batch entry points: validate scenes, render overlay/composite sequences,
benchmark the per-frame pipeline, and launch the authoring service.

Progress and reports go to stdout as line-delimited JSON records; logs go to
stderr (level from the SCRIBBLEKIT_LOG environment variable). Exit codes:
0 ok, 1 input error, 2 internal error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import sceneio, synthetic
from .engine import Engine
from .model import KeypointSpec, Scene, ScribbleError
from .render import composite, emit_svg
from .sceneio import SceneIOError

log = logging.getLogger("scribblekit")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


def _emit(record: dict) -> None:
    sys.stdout.write(json.dumps(record) + "\n")
    sys.stdout.flush()


def _scene_needs_pose(scene: Scene) -> bool:
    return any(isinstance(tr.kind, KeypointSpec) for tr in scene.trackers)


def _scene_needs_masks(scene: Scene) -> bool:
    return any(
        fx.kind == "contour" and fx.params.source == "body-mask" for fx in scene.effects
    )


def _effect_counts(scene: Scene) -> dict[str, int]:
    counts: dict[str, int] = {}
    for fx in scene.effects:
        counts[fx.kind] = counts.get(fx.kind, 0) + 1
    return counts


def cmd_validate(args) -> int:
    from .model import validate_scene

    scene = sceneio.load_scene(args.scene)
    diags = validate_scene(scene)
    for d in diags:
        _emit({"event": "diagnostic", "rule": d.rule, "subject": d.subject, "message": d.message})
    _emit({"event": "report", "ok": not diags, "diagnostics": len(diags)})
    return EXIT_OK if not diags else EXIT_INPUT


def cmd_render(args) -> int:
    scene = sceneio.load_scene(args.scene)
    if args.seed_override is not None:
        scene = dataclasses.replace(scene, seed=args.seed_override)

    if _scene_needs_pose(scene) and not args.pose:
        raise SceneIOError("pose-required", "scene uses keypoint trackers; pass --pose")
    if _scene_needs_masks(scene) and not args.masks:
        raise SceneIOError("masks-required", "scene uses body-mask contours; pass --masks")

    pose = sceneio.load_pose_track(args.pose) if args.pose else None
    body_masks = sceneio.load_mask_track(args.masks) if args.masks else None
    frames = sceneio.load_frame_sequence(args.frames)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    fps = args.fps if args.fps else (pose.frame_rate if pose else 60.0)
    engine = Engine(scene, fps=fps)

    t_start = time.perf_counter()
    overlays: list[tuple[int, object, object]] = []
    count = 0
    for i, frame in enumerate(frames):
        pose_frame = pose.frame_or_none(i) if pose else None
        body_mask = body_masks[i] if body_masks and i < len(body_masks) else None
        overlay = engine.step(i, frame=frame, pose=pose_frame, body_mask=body_mask)
        overlays.append((i, overlay, frame if args.format in ("raster", "both") else None))
        count += 1
        if args.progress_every and count % args.progress_every == 0:
            _emit({"event": "frame", "index": i})
    compute_seconds = time.perf_counter() - t_start

    def write_one(entry) -> int:
        i, overlay, base = entry
        if args.format in ("svg", "both"):
            svg = emit_svg(overlay, scene.frame_size)
            (out_dir / f"overlay_{i:06d}.svg").write_bytes(svg.encode())
        if base is not None:
            sceneio.save_frame(composite(base, overlay, scene.frame_size), out_dir / f"frame_{i:06d}.png")
        return i

    with concurrent.futures.ThreadPoolExecutor(max_workers=args.workers) as pool:
        written = sum(1 for _ in pool.map(write_one, overlays))

    wall = time.perf_counter() - t_start
    _emit({
        "event": "report",
        "frames": count,
        "written": written,
        "effects": _effect_counts(scene),
        "wall_seconds": round(wall, 4),
        "compute_fps": round(count / compute_seconds, 2) if compute_seconds > 0 else None,
    })
    return EXIT_OK if written == count else EXIT_INTERNAL


def run_bench(scene: Scene | None, count: int, size: tuple[int, int]) -> dict:
    """Benchmark tracking + effects + overlay resolution on synthetic frames.

    SVG emission cost is measured separately and kept out of the core fps.
    Returns the report record (also includes a digest of every overlay so two
    runs can be compared for identical frame computations).
    """
    scene = scene if scene is not None else synthetic.make_full_scene(size)
    frames = synthetic.make_blob_frames(size, count, radius=20.0)
    pose = synthetic.make_pose_track(size, count)
    engine = Engine(scene, fps=60.0)

    timings: dict[str, float] = {}
    frame_seconds: list[float] = []
    svg_seconds = 0.0
    digest = hashlib.sha256()
    t_total = time.perf_counter()
    for i, frame in enumerate(frames):
        t0 = time.perf_counter()
        overlay = engine.step(i, frame=frame, pose=pose.frames[i], timings=timings)
        t1 = time.perf_counter()
        frame_seconds.append(t1 - t0)
        svg = emit_svg(overlay, scene.frame_size)
        svg_seconds += time.perf_counter() - t1
        digest.update(svg.encode())
    pipeline_seconds = sum(frame_seconds)
    wall = time.perf_counter() - t_total

    fps_values = [1.0 / s for s in frame_seconds if s > 0]
    report = {
        "event": "report",
        "frames": count,
        "size": list(size),
        "mean_fps": round(count / pipeline_seconds, 2),
        "min_fps": round(min(fps_values), 2),
        "mean_fps_with_svg": round(count / (pipeline_seconds + svg_seconds), 2),
        "svg_seconds": round(svg_seconds, 6),
        "pipeline_seconds": round(pipeline_seconds, 6),
        "wall_seconds": round(wall, 4),
        "stage_seconds": {k: round(v, 6) for k, v in sorted(timings.items())},
        "stage_total_seconds": round(sum(timings.values()), 6),
        "overlay_digest": digest.hexdigest(),
        "effects": _effect_counts(scene),
    }
    return report


def cmd_bench(args) -> int:
    scene = sceneio.load_scene(args.scene) if args.scene else None
    try:
        w, h = (int(v) for v in args.size.lower().split("x"))
    except ValueError:
        raise SceneIOError("schema(size)", f"expected WIDTHxHEIGHT, got {args.size!r}")
    report = run_bench(scene, args.count, (w, h))
    _emit(report)
    return EXIT_OK


def cmd_serve(args) -> int:
    from . import service

    service.run(
        host=args.host,
        port=args.port,
        frames_dir=args.frames,
        pose_path=args.pose,
        masks_path=args.masks,
        scene_path=args.scene,
        demo=args.demo,
        fps=args.fps,
        live=args.live,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scribblekit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a scene document")
    p_validate.add_argument("--scene", required=True)
    p_validate.set_defaults(func=cmd_validate)

    p_render = sub.add_parser("render", help="render overlays for a recorded frame sequence")
    p_render.add_argument("--scene", required=True)
    p_render.add_argument("--frames", required=True, help="directory of frame_%%06d images")
    p_render.add_argument("--pose", help="pose track file (required for keypoint trackers)")
    p_render.add_argument("--masks", help="segmentation mask sidecar (body-mask contours)")
    p_render.add_argument("--out", required=True)
    p_render.add_argument("--format", choices=("svg", "raster", "both"), default="svg")
    p_render.add_argument("--seed-override", type=int, default=None)
    p_render.add_argument("--workers", type=int, default=1)
    p_render.add_argument("--fps", type=float, default=None, help="engine fps (default: pose rate or 60)")
    p_render.add_argument("--progress-every", type=int, default=0)
    p_render.set_defaults(func=cmd_render)

    p_bench = sub.add_parser("bench", help="benchmark the per-frame pipeline on synthetic frames")
    p_bench.add_argument("--scene", help="scene to run (default: built-in six-effect scene)")
    p_bench.add_argument("--count", type=int, default=600)
    p_bench.add_argument("--size", default="640x480")
    p_bench.set_defaults(func=cmd_bench)

    p_serve = sub.add_parser("serve", help="run the live authoring service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--frames", help="recorded frame directory")
    p_serve.add_argument("--pose", help="pose track file")
    p_serve.add_argument("--masks", help="mask sidecar file")
    p_serve.add_argument("--scene", help="start from a saved scene")
    p_serve.add_argument("--demo", action="store_true", help="synthetic demo frame source")
    p_serve.add_argument("--fps", type=float, default=60.0)
    p_serve.add_argument("--live", action="store_true", help="live mode: sketch while playing")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, os.environ.get("SCRIBBLEKIT_LOG", "WARNING").upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScribbleError as exc:
        log.error("%s", exc)
        sys.stderr.write(f"error: {exc.code}: {exc}\n")
        return EXIT_INPUT
    except OSError as exc:
        sys.stderr.write(f"error: io: {exc}\n")
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - internal failure path
        log.exception("internal error")
        sys.stderr.write(f"internal error: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
