/**
 * Page glue: WebSocket lifecycle, keyboard/gamepad sampling, frame
 * rendering with overlays, and one command send per animation frame.
 *
 * The camera frame is drawn onto the canvas exactly as received (no
 * client-side processing): the operator sees what the robot's pipeline
 * sees, pre-pipeline.
 */

import { axesFromGamepad, ControlState } from "./input.js";
import { encodeCommand, encodeRecordToggle, type FrameMsg } from "./protocol.js";
import { SessionTracker } from "./session.js";
import { drawGauges } from "./gauges.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function wsUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/teleop`;
}

function main(): void {
  const canvas = el<HTMLCanvasElement>("camera");
  const ctx = canvas.getContext("2d")!;
  const linearCtx = el<HTMLCanvasElement>("gauge-linear").getContext("2d")!;
  const angularCtx = el<HTMLCanvasElement>("gauge-angular").getContext("2d")!;
  const banner = el<HTMLDivElement>("banner");
  const statusBadge = el<HTMLSpanElement>("status");
  const fpsBadge = el<HTMLSpanElement>("fps");
  const poseOut = el<HTMLSpanElement>("pose");
  const counters = el<HTMLSpanElement>("counters");
  const recordDot = el<HTMLSpanElement>("record-dot");
  const recordBtn = el<HTMLButtonElement>("record-btn");
  const retryBtn = el<HTMLButtonElement>("retry-btn");

  const control = new ControlState();
  let ws: WebSocket | null = null;
  let session = new SessionTracker();
  let wantRecording = false;
  let lastFrame: HTMLImageElement | null = null;

  function setBanner(text: string | null): void {
    banner.textContent = text ?? "";
    banner.style.display = text === null ? "none" : "block";
    retryBtn.style.display = text === null ? "none" : "inline-block";
  }

  function showStatus(): void {
    statusBadge.textContent = session.status;
    statusBadge.className = `badge ${session.status}`;
    fpsBadge.textContent = session.fps > 0 ? `${session.fps} fps` : "- fps";
    counters.textContent =
      `frames ${session.framesSeen} | dropped ${session.droppedFrames}` +
      ` | malformed ${session.malformedMessages}`;
    recordDot.className = session.recordingAcked ? "dot on" : "dot";
    recordBtn.textContent = session.recordingAcked ? "stop recording" : "start recording";
  }

  function renderFrame(msg: FrameMsg): void {
    const img = new Image();
    img.onload = () => {
      lastFrame = img;
      ctx.drawImage(img, 0, 0, canvas.width, canvas.height);
    };
    img.src = `data:image/png;base64,${msg.png_b64}`;
    const [x, y, theta] = msg.pose;
    poseOut.textContent = `x ${x.toFixed(2)} m, y ${y.toFixed(2)} m, th ${theta.toFixed(2)} rad`;
  }

  function connect(): void {
    session = new SessionTracker({
      onFrame: renderFrame,
      onError: (m) => setBanner(/busy|session in use/i.test(m) ? "session in use by another client" : m),
    });
    setBanner(null);
    control.connected = false;
    showStatus();
    ws = new WebSocket(wsUrl());
    ws.onopen = () => {
      control.connected = true;
    };
    ws.onmessage = (ev) => {
      session.handleMessage(String(ev.data));
      showStatus();
    };
    ws.onclose = () => {
      control.connected = false;
      session.markClosed();
      if (session.status !== "busy") setBanner("connection closed");
      showStatus();
    };
    ws.onerror = () => {
      control.connected = false;
      session.markFailed();
      setBanner("connection failed; is the teleop service running?");
      showStatus();
    };
  }

  retryBtn.addEventListener("click", connect);
  recordBtn.addEventListener("click", () => {
    wantRecording = !wantRecording;
    if (ws !== null && ws.readyState === WebSocket.OPEN) {
      ws.send(encodeRecordToggle(wantRecording));
    }
  });

  window.addEventListener("keydown", (ev) => {
    if (control.keyEvent(ev.key, true)) ev.preventDefault();
    if (ev.key === "r" || ev.key === "R") recordBtn.click();
  });
  window.addEventListener("keyup", (ev) => {
    if (control.keyEvent(ev.key, false)) ev.preventDefault();
  });

  function tick(): void {
    const pads = navigator.getGamepads ? navigator.getGamepads() : [];
    const pad = pads && pads[0];
    control.gamepad = pad ? axesFromGamepad(pad.axes) : null;
    const cmd = control.step();
    if (ws !== null && ws.readyState === WebSocket.OPEN) {
      ws.send(encodeCommand(cmd)); // one command per animation frame
    }
    drawGauges(linearCtx, angularCtx, cmd);
    if (lastFrame !== null) {
      ctx.drawImage(lastFrame, 0, 0, canvas.width, canvas.height);
    }
    requestAnimationFrame(tick);
  }

  connect();
  requestAnimationFrame(tick);
}

main();
