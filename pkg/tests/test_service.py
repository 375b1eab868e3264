"""WebSocket service: handshake, command round-trips, overlay broadcast."""

import json
import math
import threading

import pytest
from websockets.sync.client import connect

from scribblekit import service as service_mod
from scribblekit.service import DEMO_SIZE, SessionService, build_source, serve_session


@pytest.fixture()
def live_server():
    import asyncio

    source = build_source(demo=True)
    svc = SessionService(source, scene=None, fps=60.0, live=False)
    loop = asyncio.new_event_loop()
    ready = threading.Event()
    port_box = {}

    async def main():
        from websockets.asyncio.server import serve

        async with serve(svc.handler, "127.0.0.1", 0) as server:
            port_box["port"] = server.sockets[0].getsockname()[1]
            ready.set()
            stepper = asyncio.create_task(svc.play_loop())
            try:
                await asyncio.Future()
            except asyncio.CancelledError:
                stepper.cancel()
                raise

    def runner():
        try:
            loop.run_until_complete(main())
        except BaseException:
            pass

    thread = threading.Thread(target=runner, daemon=True)
    thread.start()
    assert ready.wait(5.0)
    yield f"ws://127.0.0.1:{port_box['port']}"
    loop.call_soon_threadsafe(lambda: [t.cancel() for t in asyncio.all_tasks(loop)])
    thread.join(timeout=2.0)


def _recv_json(ws, want_type, timeout=5.0):
    while True:
        msg = ws.recv(timeout=timeout)
        if isinstance(msg, bytes):
            continue
        obj = json.loads(msg)
        if obj["type"] == want_type:
            return obj


def _command(ws, command, seq=[0]):
    seq[0] += 1
    ws.send(json.dumps({"type": "command", "seq": seq[0], "command": command}))
    reply = _recv_json(ws, "events")
    assert reply["seq"] == seq[0]
    return reply["events"]


def test_handshake_and_initial_view(live_server):
    with connect(live_server) as ws:
        hello = _recv_json(ws, "hello")
        assert hello["protocol"] == 1
        assert hello["frame_size"] == list(DEMO_SIZE)
        assert hello["role"] == "author"
        first = ws.recv(timeout=5.0)
        assert isinstance(first, bytes) and first[4:8] == b"\x89PNG"[0:4]
        overlay = _recv_json(ws, "overlay")
        assert overlay["svg"].startswith("<?xml")


def test_author_workflow_produces_translated_overlay(live_server):
    from scribblekit.synthetic import wrist_position

    with connect(live_server) as ws:
        _recv_json(ws, "hello")
        w0 = wrist_position(0, DEMO_SIZE)
        events = _command(
            ws, {"kind": "select_track_point", "x": w0.x, "y": w0.y, "point_kind": "keypoint"}
        )
        assert events[0]["kind"] == "track_point_confirmed"

        _command(ws, {"kind": "begin_stroke"})
        _command(ws, {"kind": "append_points", "points": [[w0.x - 5, w0.y - 8], [w0.x + 5, w0.y - 8]]})
        _command(ws, {"kind": "end_stroke"})
        events = _command(ws, {"kind": "group_element"})
        assert events[0]["kind"] == "element_created"
        events = _command(ws, {"kind": "apply_effect", "effect_kind": "binding"})
        assert events[0]["kind"] == "effect_applied"
        _command(ws, {"kind": "resume_video"})

        # wait for a handful of stepped overlays
        seen = []
        while len(seen) < 8:
            obj = _recv_json(ws, "overlay", timeout=10.0)
            if obj["frame"] > 0:
                seen.append(obj)
        _command(ws, {"kind": "pause_video"})

        last = seen[-1]
        k = last["frame"]
        expected = wrist_position(k, DEMO_SIZE)
        # first path vertex of the bound element: drawn at (w0.x-5, w0.y-8)
        import re

        m = re.search(r'M ([0-9.eE+-]+) ([0-9.eE+-]+)', last["svg"])
        assert m
        got_x, got_y = float(m.group(1)), float(m.group(2))
        assert got_x == pytest.approx(w0.x - 5 + (expected.x - w0.x), abs=0.05)
        assert got_y == pytest.approx(w0.y - 8 + (expected.y - w0.y), abs=0.05)


def test_second_client_is_read_only_observer(live_server):
    with connect(live_server) as author, connect(live_server) as mirror:
        hello_a = _recv_json(author, "hello")
        hello_m = _recv_json(mirror, "hello")
        assert hello_a["role"] == "author"
        assert hello_m["role"] == "observer"
        mirror.send(json.dumps({"type": "command", "seq": 1, "command": {"kind": "pause_video"}}))
        reply = _recv_json(mirror, "events")
        assert reply["events"][0]["code"] == "read-only"
