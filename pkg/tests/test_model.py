"""Scene validation rules and purity."""

import random

from scribblekit.contour import ContourParams
from scribblekit.effects import BindingParams, TrajectoryParams, TriggerParams
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
    validate_scene,
)


def _element(eid="el", x=10.0, y=10.0):
    pts = (Point2(x, y), Point2(x + 5, y + 5))
    return SketchElement(eid, (Stroke(pts, Style()),), Point2(x, y))


def _color_tracker(tid="trk", x=5.0, y=5.0):
    return TrackerSpec(tid, ColorBlobSpec(Point2(x, y), ColorWindow(90, 110, 140, 160, 190, 210)))


def test_empty_scene_is_valid():
    assert validate_scene(Scene()) == []


def test_trigger_with_one_tracker_reports_arity():
    scene = Scene(
        elements=(_element(),),
        trackers=(_color_tracker(),),
        effects=(EffectSpec("fx", "trigger", ("el",), ("trk",), TriggerParams()),),
    )
    diags = validate_scene(scene)
    assert any(d.rule == "trigger-arity" and d.subject == "fx" for d in diags)


def test_binding_with_missing_tracker_reports_dangling():
    scene = Scene(
        elements=(_element(),),
        effects=(EffectSpec("fx", "binding", ("el",), ("ghost",), BindingParams()),),
    )
    rules = {d.rule for d in validate_scene(scene)}
    assert "dangling-tracker" in rules


def test_dangling_element_reported():
    scene = Scene(
        trackers=(_color_tracker(),),
        effects=(EffectSpec("fx", "binding", ("ghost",), ("trk",), BindingParams()),),
    )
    assert any(d.rule == "dangling-element" for d in validate_scene(scene))


def test_duplicate_ids_reported():
    scene = Scene(elements=(_element("a"), _element("a")))
    assert any(d.rule == "duplicate-id" and d.subject == "a" for d in validate_scene(scene))


def test_keypoint_index_bounds():
    scene = Scene(trackers=(TrackerSpec("t", KeypointSpec(index=33)),))
    assert any(d.rule == "keypoint-index" for d in validate_scene(scene))
    ok = Scene(trackers=(TrackerSpec("t", KeypointSpec(index=32)),))
    assert validate_scene(ok) == []


def test_stroke_invariants():
    bad_width = SketchElement("e", (Stroke((Point2(0, 0), Point2(1, 1)), Style(width=0.0)),))
    assert any(d.rule == "stroke-width" for d in validate_scene(Scene(elements=(bad_width,))))
    one_point = SketchElement("e", (Stroke((Point2(0, 0),), Style()),))
    assert any(d.rule == "stroke-points" for d in validate_scene(Scene(elements=(one_point,))))
    bad_opacity = SketchElement("e", (Stroke((Point2(0, 0), Point2(1, 1)), Style(opacity=1.5)),))
    assert any(d.rule == "stroke-opacity" for d in validate_scene(Scene(elements=(bad_opacity,))))


def test_nonfinite_point_reported():
    el = SketchElement("e", (Stroke((Point2(0, 0), Point2(float("nan"), 1)), Style()),))
    assert any(d.rule == "nonfinite-point" for d in validate_scene(Scene(elements=(el,))))


def test_seed_point_outside_frame():
    scene = Scene(frame_size=(100, 100), trackers=(_color_tracker(x=150.0, y=5.0),))
    assert any(d.rule == "seed-bounds" for d in validate_scene(scene))


def test_frame_size_must_be_positive():
    assert any(d.rule == "frame-size" for d in validate_scene(Scene(frame_size=(0, 100))))


def test_contour_arity_rules():
    tracker_source = EffectSpec("fx", "contour", (), (), ContourParams(source="tracker"))
    diags = validate_scene(Scene(effects=(tracker_source,)))
    assert any(d.rule == "contour-arity" for d in diags)

    body_source = EffectSpec("fx", "contour", (), ("trk",), ContourParams(source="body-mask"))
    diags = validate_scene(Scene(trackers=(_color_tracker(),), effects=(body_source,)))
    assert any(d.rule == "contour-arity" for d in diags)


def test_trajectory_param_bounds():
    fx = EffectSpec("fx", "trajectory", ("el",), ("trk",), TrajectoryParams(max_elements=0))
    scene = Scene(elements=(_element(),), trackers=(_color_tracker(),), effects=(fx,))
    assert any(d.rule == "trajectory-params" for d in validate_scene(scene))


def test_validation_is_pure():
    scene = Scene(
        elements=(_element(),),
        trackers=(_color_tracker(),),
        effects=(EffectSpec("fx", "trigger", ("el",), ("trk",), TriggerParams()),),
    )
    first = validate_scene(scene)
    for _ in range(5):
        assert validate_scene(scene) == first


def test_random_valid_scenes_step_cleanly():
    """Zero-diagnostic scenes must run the whole pipeline without reference
    errors for many frames."""
    from scribblekit.engine import Engine
    from scribblekit.synthetic import make_blob_frames, make_pose_track

    from genscene import random_scene

    size = (64, 48)
    frames = make_blob_frames(size, 8, radius=8.0)
    pose = make_pose_track(size, 8)
    rng = random.Random(42)
    for trial in range(6):
        scene = random_scene(rng, size=size)
        assert validate_scene(scene) == []
        engine = Engine(scene, fps=60.0)
        depth = 1000 if trial < 2 else 150
        for i in range(depth):
            f = frames[i % len(frames)]
            engine.step(i, frame=f, pose=pose.frames[i % len(pose.frames)])
