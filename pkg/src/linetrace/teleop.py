"""WebSocket teleoperation service: streams simulated camera frames at the
camera rate and drives the robot with the latest client command.

Wire protocol (JSON text messages):
- server -> client  {"type": "hello", "world": name, "fps": 6}
- server -> client  {"type": "frame", "seq": n, "t": secs, "png_b64": ...,
                     "pose": [x, y, theta], "recording": bool}
- client -> server  {"type": "cmd", "linear": f, "angular": f}   (raw, [-1, 1])
- client -> server  {"type": "record", "on": bool}
- server -> client  {"type": "error", "msg": ...}

One client at a time; a second connection is refused with a busy error.
While recording, each tick appends (preprocessed frame, normalized command)
to the session's demo set, written as CSV when the client disconnects.
"""

from __future__ import annotations

import asyncio
import base64
import io
import json
import math
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image

from .dataset import DemoSet, normalize_velocity, write_csv
from .imaging import preprocess
from .sim import CameraModel, SpeedLimits, render_camera, start_state, step_kinematics

FALLBACK_PAGE = """<!doctype html>
<html><head><title>linetrace teleop</title></head>
<body style="font-family: sans-serif">
<h2>linetrace teleop service</h2>
<p>The browser UI is not built. Build it with:</p>
<pre>cd frontend && npm install && npm run build</pre>
<p>then restart with <code>--ui-dir frontend/dist</code>.
The WebSocket endpoint is at <code>/teleop</code>.</p>
</body></html>
"""


def _encode_png(frame: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(frame, "RGB").save(buf, format="PNG", compress_level=1)
    return base64.b64encode(buf.getvalue()).decode("ascii")


class TeleopSession:
    """State shared between the frame loop and the message handler.

    Concurrency contract: a single latest-command cell (stale commands are
    overwritten, never queued) plus a recording flag; both are only mutated
    from the event loop.
    """

    def __init__(self, world, cam, limits, threshold=None):
        self.world = world
        self.cam = cam
        self.limits = limits
        self.threshold = threshold
        self.state = start_state(world)
        self.latest_cmd = (0.0, 0.0)
        self.recording = False
        self.seq = 0
        self.inputs: list[np.ndarray] = []
        self.labels: list[tuple[float, float]] = []

    def tick(self):
        """One simulation step: render, optionally record, advance the robot.

        Returns the frame message for the client. The step consumes the most
        recent command received before this tick.
        """
        v_raw, w_raw = self.latest_cmd
        frame = render_camera(self.world, self.state.pose, self.cam)
        if self.recording:
            if self.threshold is None:
                raise RuntimeError("recording requires a color threshold")
            self.inputs.append(preprocess(frame, self.threshold))
            self.labels.append(normalize_velocity(v_raw, w_raw))
        msg = {
            "type": "frame",
            "seq": self.seq,
            "t": self.seq * self.cam.frame_period,
            "png_b64": _encode_png(frame),
            "pose": [self.state.x, self.state.y, self.state.theta],
            "recording": self.recording,
        }
        self.state = step_kinematics(
            self.state, v_raw * self.limits.v_max, w_raw * self.limits.w_max,
            self.cam.frame_period,
        )
        self.seq += 1
        return msg

    def demo_set(self) -> DemoSet:
        if not self.inputs:
            return DemoSet.empty("teleop")
        return DemoSet(
            np.array(self.inputs, dtype=np.uint8),
            np.array(self.labels, dtype=np.float64),
            provenance="teleop",
        )


def _parse_command(text):
    """Returns ('cmd', (v, w)) | ('record', bool) | raises ValueError."""
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"not valid JSON: {e.msg}") from e
    if not isinstance(msg, dict):
        raise ValueError("message must be a JSON object")
    kind = msg.get("type")
    if kind == "cmd":
        try:
            v = float(msg["linear"])
            w = float(msg["angular"])
        except (KeyError, TypeError, ValueError) as e:
            raise ValueError("cmd needs numeric 'linear' and 'angular'") from e
        if not (math.isfinite(v) and math.isfinite(w)):
            raise ValueError("cmd velocities must be finite")
        return "cmd", (min(max(v, -1.0), 1.0), min(max(w, -1.0), 1.0))
    if kind == "record":
        if not isinstance(msg.get("on"), bool):
            raise ValueError("record needs boolean 'on'")
        return "record", msg["on"]
    raise ValueError(f"unknown message type {kind!r}")


def make_app(world, cam=None, limits=None, threshold=None, out_csv=None, ui_dir=None):
    cam = cam or CameraModel()
    limits = limits or SpeedLimits()
    app = FastAPI(title="linetrace teleop")
    app.state.busy = False
    app.state.sessions_served = 0

    async def frame_loop(ws: WebSocket, session: TeleopSession):
        loop = asyncio.get_running_loop()
        next_tick = loop.time()
        while True:
            msg = session.tick()
            await ws.send_text(json.dumps(msg))
            next_tick += session.cam.frame_period
            await asyncio.sleep(max(0.0, next_tick - loop.time()))

    @app.websocket("/teleop")
    async def teleop(ws: WebSocket):
        await ws.accept()
        if app.state.busy:
            await ws.send_text(json.dumps({"type": "error", "msg": "busy: session in use"}))
            await ws.close()
            return
        app.state.busy = True
        session = TeleopSession(world, cam, limits, threshold)
        await ws.send_text(json.dumps({"type": "hello", "world": world.name, "fps": cam.fps}))
        loop_task = asyncio.create_task(frame_loop(ws, session))
        try:
            while True:
                text = await ws.receive_text()
                try:
                    kind, value = _parse_command(text)
                except ValueError as e:
                    await ws.send_text(json.dumps({"type": "error", "msg": str(e)}))
                    continue
                if kind == "cmd":
                    session.latest_cmd = value
                else:
                    session.recording = value
        except WebSocketDisconnect:
            pass
        finally:
            loop_task.cancel()
            try:
                await loop_task
            except asyncio.CancelledError:
                pass
            if out_csv is not None and session.inputs:
                write_csv(session.demo_set(), out_csv)
            app.state.sessions_served += 1
            app.state.busy = False

    if ui_dir is not None and Path(ui_dir).is_dir():
        index = Path(ui_dir) / "index.html"

        @app.get("/", response_class=HTMLResponse)
        def root():
            if index.is_file():
                return index.read_text(encoding="utf-8")
            return FALLBACK_PAGE

        app.mount("/assets", StaticFiles(directory=str(ui_dir)), name="assets")
    else:

        @app.get("/", response_class=HTMLResponse)
        def root():
            return FALLBACK_PAGE

    return app


def serve_teleop(world, port=8765, host="127.0.0.1", cam=None, limits=None,
                 threshold=None, out_csv=None, ui_dir=None):
    """Run the teleop service until interrupted."""
    import uvicorn

    app = make_app(world, cam=cam, limits=limits, threshold=threshold,
                   out_csv=out_csv, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
