"""Random valid scene generator shared by round-trip, fuzz, and replay tests.

Scenes come out canonicalized (floats at serialized precision) so structural
round-trip comparisons are exact.
"""

from __future__ import annotations

import random

from scribblekit.contour import ContourParams
from scribblekit.effects import (
    BindingParams,
    FlipBookParams,
    ParticleParams,
    TrajectoryParams,
    TriggerParams,
)
from scribblekit.model import (
    ColorBlobSpec,
    ColorWindow,
    EffectSpec,
    KeypointSpec,
    Point2,
    Scene,
    SketchElement,
    Stroke,
    Style,
    TrackerSpec,
)
from scribblekit.sceneio import canonicalize_scene


def _point(rng: random.Random, size) -> Point2:
    return Point2(rng.uniform(0, size[0] - 1), rng.uniform(0, size[1] - 1))


def _style(rng: random.Random) -> Style:
    return Style(
        color=(rng.randrange(256), rng.randrange(256), rng.randrange(256), rng.randrange(1, 256)),
        width=rng.uniform(0.5, 8.0),
        opacity=rng.uniform(0.05, 1.0),
    )


def _element(rng: random.Random, eid: str, size) -> SketchElement:
    strokes = []
    for _ in range(rng.randrange(1, 4)):
        pts = tuple(_point(rng, size) for _ in range(rng.randrange(2, 8)))
        strokes.append(Stroke(pts, _style(rng)))
    return SketchElement(eid, tuple(strokes), _point(rng, size))


def _window(rng: random.Random) -> ColorWindow:
    def channel():
        c = rng.randrange(256)
        return max(0, c - 10), min(255, c + 10)

    (r_lo, r_hi), (g_lo, g_hi), (b_lo, b_hi) = channel(), channel(), channel()
    return ColorWindow(r_lo, r_hi, g_lo, g_hi, b_lo, b_hi)


def random_scene(rng: random.Random, size=(64, 48), n_elements: int | None = None) -> Scene:
    """A valid scene with a random subset of the six effect kinds."""
    n_elements = n_elements if n_elements is not None else rng.randrange(2, 6)
    elements = tuple(_element(rng, f"el-{i}", size) for i in range(n_elements))
    trackers = (
        TrackerSpec("trk-color", ColorBlobSpec(_point(rng, size), _window(rng))),
        TrackerSpec("trk-kp", KeypointSpec(index=rng.randrange(33))),
    )

    def pick_element() -> str:
        return f"el-{rng.randrange(n_elements)}"

    effects = []
    kinds = [k for k in ("binding", "flipbook", "trigger", "particles", "trajectory", "contour")
             if rng.random() < 0.7]
    for i, kind in enumerate(kinds):
        fid = f"fx-{i}"
        tracker = rng.choice(["trk-color", "trk-kp"])
        if kind == "binding":
            effects.append(EffectSpec(fid, kind, (pick_element(),), (tracker,), BindingParams()))
        elif kind == "flipbook":
            frames = tuple(pick_element() for _ in range(rng.randrange(1, 4)))
            effects.append(EffectSpec(fid, kind, frames, (), FlipBookParams(fps=rng.uniform(1, 20))))
        elif kind == "trigger":
            effects.append(EffectSpec(
                fid, kind, (pick_element(),), ("trk-color", "trk-kp"),
                TriggerParams(threshold=rng.uniform(5, 200),
                              direction=rng.choice(["decrease", "increase"])),
            ))
        elif kind == "particles":
            emitter = tuple(_point(rng, size) for _ in range(rng.randrange(2, 5)))
            effects.append(EffectSpec(
                fid, kind, (pick_element(),), (tracker,),
                ParticleParams(emitter_points=emitter,
                               spawn_rate=rng.uniform(1, 30),
                               speed=rng.uniform(5, 120),
                               lifetime=rng.uniform(0.2, 3.0)),
            ))
        elif kind == "trajectory":
            effects.append(EffectSpec(
                fid, kind, (pick_element(),), (tracker,),
                TrajectoryParams(max_elements=rng.randrange(1, 40),
                                 fade=rng.uniform(0.5, 1.0),
                                 scale_step=rng.uniform(0.5, 1.0)),
            ))
        elif kind == "contour":
            effects.append(EffectSpec(
                fid, kind, (), ("trk-color",),
                ContourParams(mode=rng.choice(["static", "animated"]),
                              window_fraction=rng.uniform(0.1, 1.0),
                              cycles_per_second=rng.uniform(0.1, 2.0),
                              stroke=_style(rng)),
            ))

    scene = Scene(
        frame_size=size,
        elements=elements,
        trackers=trackers,
        effects=tuple(effects),
        seed=rng.randrange(2**31),
    )
    return canonicalize_scene(scene)
