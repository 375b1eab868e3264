"""scribblekit: deterministic scribble-animation engine for video frames.

Sketched elements respond to color-blob and skeleton-keypoint tracking
through six effect kinds: object binding, flip-book playback, distance
triggers, particle emitters, motion trajectories, and contour highlights.
"""

from .engine import Engine
from .model import (
    ColorBlobSpec,
    ColorWindow,
    Diagnostic,
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
from .render import FrameOverlay, composite, emit_svg, resolve_frame
from .sceneio import load_scene, parse_scene, save_scene, serialize_scene

__version__ = "0.1.0"

__all__ = [
    "Engine",
    "Scene",
    "SketchElement",
    "Stroke",
    "Style",
    "Point2",
    "TrackerSpec",
    "ColorBlobSpec",
    "KeypointSpec",
    "ColorWindow",
    "EffectSpec",
    "Diagnostic",
    "validate_scene",
    "FrameOverlay",
    "resolve_frame",
    "emit_svg",
    "composite",
    "parse_scene",
    "serialize_scene",
    "load_scene",
    "save_scene",
]
