"""Live authoring bridge over WebSocket.

One session per server, one commanding client at a time; additional
connections join as read-only observers (mirror views). All state changes
run on the event loop, so clients observe a single total order of events.

Message framing is the WebSocket protocol's own: text frames carry one JSON
message each, binary frames carry a 4-byte little-endian frame index header
followed by PNG bytes of the base video frame. See docs/protocol.md.
"""

from __future__ import annotations

import asyncio
import io
import json
import logging
import struct
import sys

import numpy as np
from PIL import Image
from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from . import sceneio, session, synthetic
from .model import Scene
from .render import emit_svg
from .sceneio import PoseTrack
from .tracking import BinaryMask

log = logging.getLogger("scribblekit.service")

PROTOCOL_VERSION = 1
DEMO_SIZE = (320, 240)
DEMO_FRAMES = 600


class FrameSource:
    """Recorded or synthetic frame provider; index-addressed and replayable."""

    def __init__(self, frames: list[np.ndarray], pose: PoseTrack | None,
                 masks: list[BinaryMask] | None, loop: bool = False):
        self.frames = frames
        self.pose = pose
        self.masks = masks
        self.loop = loop

    def get(self, index: int):
        n = len(self.frames)
        if index >= n and not self.loop:
            return None, None, None
        i = index % n if self.loop else index
        pose = self.pose.frame_or_none(i) if self.pose else None
        mask = self.masks[i] if self.masks and i < len(self.masks) else None
        return self.frames[i], pose, mask


def build_source(frames_dir=None, pose_path=None, masks_path=None, demo=False, live=False) -> FrameSource:
    if demo:
        frames = synthetic.make_blob_frames(DEMO_SIZE, DEMO_FRAMES, radius=16.0)
        pose = synthetic.make_pose_track(DEMO_SIZE, DEMO_FRAMES)
        return FrameSource(frames, pose, None, loop=live)
    if not frames_dir:
        raise sceneio.SceneIOError("frames-required", "pass --frames or --demo")
    frames = list(sceneio.load_frame_sequence(frames_dir))
    pose = sceneio.load_pose_track(pose_path) if pose_path else None
    masks = sceneio.load_mask_track(masks_path) if masks_path else None
    return FrameSource(frames, pose, masks, loop=live)


def _png_bytes(frame: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(frame, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


class SessionService:
    def __init__(self, source: FrameSource, scene: Scene | None, fps: float, live: bool):
        self.source = source
        self.fps = fps
        frame0, pose0, mask0 = source.get(0)
        if scene is None:
            h, w = frame0.shape[:2]
            scene = Scene(frame_size=(w, h))
        self.state = session.new_session(scene, fps=fps, live=live)
        session.prime_frame(self.state, frame0, pose0, mask0)
        self.state.last_overlay = self.state.engine.step(0, frame=frame0, pose=pose0, body_mask=mask0)
        self.author = None
        self.connections: set = set()

    # -- broadcasting --------------------------------------------------------

    async def _send_safe(self, ws, payload) -> None:
        try:
            await ws.send(payload)
        except ConnectionClosed:
            pass

    async def broadcast(self, message: dict) -> None:
        if self.connections:
            data = json.dumps(message)
            await asyncio.gather(*(self._send_safe(ws, data) for ws in set(self.connections)))

    async def broadcast_binary(self, payload: bytes) -> None:
        if self.connections:
            await asyncio.gather(*(self._send_safe(ws, payload) for ws in set(self.connections)))

    async def send_view(self, ws_or_all=None) -> None:
        """Current base frame (binary) + overlay to one client or everyone."""
        state = self.state
        overlay_msg = {
            "type": "overlay",
            "frame": state.current_frame,
            "svg": emit_svg(state.last_overlay, state.scene.frame_size),
        }
        frame_payload = None
        if state.last_frame is not None:
            frame_payload = struct.pack("<I", state.current_frame) + _png_bytes(state.last_frame)
        if ws_or_all is None:
            if frame_payload:
                await self.broadcast_binary(frame_payload)
            await self.broadcast(overlay_msg)
        else:
            if frame_payload:
                await self._send_safe(ws_or_all, frame_payload)
            await self._send_safe(ws_or_all, json.dumps(overlay_msg))

    # -- play loop ------------------------------------------------------------

    async def play_loop(self) -> None:
        while True:
            if self.state.mode == "playing":
                frame, pose, mask = self.source.get(self.state.current_frame + 1)
                _, events = session.step_session(self.state, frame, pose, mask)
                for ev in events:
                    await self.broadcast({"type": "event", "event": ev.to_json()})
                if frame is not None:
                    await self.send_view()
            await asyncio.sleep(1.0 / self.fps)

    # -- per-connection -------------------------------------------------------

    async def handler(self, ws) -> None:
        role = "author" if self.author is None else "observer"
        if role == "author":
            self.author = ws
        self.connections.add(ws)
        try:
            await ws.send(json.dumps({
                "type": "hello",
                "protocol": PROTOCOL_VERSION,
                "frame_size": list(self.state.scene.frame_size),
                "role": role,
                "frame": self.state.current_frame,
                "mode": self.state.mode,
            }))
            await self.send_view(ws)
            async for raw in ws:
                if isinstance(raw, bytes):
                    continue  # clients never send binary
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await self._send_safe(ws, json.dumps({
                        "type": "event",
                        "event": {"kind": "error", "code": "syntax", "message": "bad JSON"},
                    }))
                    continue
                if msg.get("type") != "command":
                    continue
                seq = msg.get("seq")
                if ws is not self.author:
                    await self._send_safe(ws, json.dumps({
                        "type": "events", "seq": seq,
                        "events": [{"kind": "error", "code": "read-only",
                                    "message": "observers cannot send commands"}],
                    }))
                    continue
                try:
                    events = session.apply_command(self.state, msg.get("command") or {})
                except Exception:
                    log.exception("command failed")
                    events = [session.Event("error", {"code": "internal", "message": "command failed"})]
                await self._send_safe(ws, json.dumps({
                    "type": "events", "seq": seq,
                    "events": [e.to_json() for e in events],
                }))
                mutated = any(e.kind in ("track_point_confirmed", "element_created",
                                         "effect_applied", "param_set", "undone") for e in events)
                if mutated:
                    await self.send_view()
        finally:
            self.connections.discard(ws)
            if ws is self.author:
                self.author = None


async def serve_session(service: SessionService, host: str, port: int) -> None:
    async with serve(service.handler, host, port) as server:
        actual_port = server.sockets[0].getsockname()[1] if server.sockets else port
        sys.stdout.write(json.dumps({"event": "serving", "host": host, "port": actual_port}) + "\n")
        sys.stdout.flush()
        stepper = asyncio.create_task(service.play_loop())
        try:
            await asyncio.Future()
        finally:
            stepper.cancel()


def run(host="127.0.0.1", port=8765, frames_dir=None, pose_path=None, masks_path=None,
        scene_path=None, demo=False, fps=60.0, live=False) -> None:
    source = build_source(frames_dir, pose_path, masks_path, demo, live)
    scene = sceneio.load_scene(scene_path) if scene_path else None
    service = SessionService(source, scene, fps, live)
    try:
        asyncio.run(serve_session(service, host, port))
    except KeyboardInterrupt:
        pass
